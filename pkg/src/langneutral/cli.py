"""Command-line surface for the probing toolkit.

Every command is deterministic: identical flags (including --seed) produce
byte-identical outputs.  Reports go to --output (default stdout) as TSV or
JSON; all input validation happens before any output file is created.

Exit codes: 0 success, 2 usage/configuration error, 3 data or format error,
4 numeric/training error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import align as al
from . import classify as cl
from . import cluster as cu
from . import embstore as es
from . import geometry as ge
from . import retrieval as rt
from . import synth as sy
from .errors import (
    ConfigError,
    CorruptionError,
    FormatError,
    LangNeutralError,
    TrainingError,
    ValidationError,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _tsv(rows) -> str:
    return "\n".join("\t".join(str(c) for c in row) for row in rows) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _kv_pairs(values, what: str) -> dict:
    out = {}
    for item in values:
        if "=" not in item:
            raise ConfigError(f"{what} must look like lang=path, got {item!r}")
        key, path = item.split("=", 1)
        out[key] = path
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_pool(args) -> int:
    dump = es.load(args.dump)
    pooled = es.pool_set(dump, args.pooling, skip_special=not args.include_special)
    es.write_dump(pooled, args.output)
    summary = {"records": len(pooled.records), "dim": pooled.dim, "pooling": args.pooling}
    sys.stdout.write(_json(summary))
    return 0


def cmd_centroids(args) -> int:
    dump = es.load(args.dump)
    if dump.kind != es.KIND_SENTENCES:
        raise ValidationError("centroids expects a sentence-vector dump (kind 1)")
    by_lang = {}
    for rec in dump.records:
        by_lang.setdefault(rec.language, []).append(rec)
    if not by_lang:
        raise ValidationError("empty dump")
    records = []
    counts = {}
    for lang in sorted(by_lang):
        cent = ge.centroid(by_lang[lang])
        counts[lang] = cent.sample_count
        records.append(
            es.SentenceVector(
                sentence_id=f"centroid:{lang}",
                language=lang,
                pooling=by_lang[lang][0].pooling,
                vector=cent.vector.astype(np.float32),
            )
        )
    out_set = es.EmbeddingSet(
        model_id=dump.model_id, layer=dump.layer, dim=dump.dim, records=records
    )
    es.write_dump(out_set, args.output)
    with open(args.output + ".json", "w", encoding="utf-8") as fh:
        fh.write(_json({"sample_counts": counts}))
    sys.stdout.write(_json({"languages": sorted(by_lang), "dim": dump.dim}))
    return 0


def _read_centroids(path) -> dict:
    dump = es.load(path)
    cents = {}
    for rec in dump.records:
        cents[rec.language] = ge.LanguageCentroid(
            language=rec.language,
            vector=np.asarray(rec.vector, dtype=np.float64),
            sample_count=1,
        )
    return cents


def cmd_center(args) -> int:
    dump = es.load(args.dump)
    cents = _read_centroids(args.centroids)
    missing = sorted({r.language for r in dump.records} - set(cents))
    if missing:
        raise ConfigError(f"no centroid for language(s): {', '.join(missing)}")
    records = []
    for rec in dump.records:
        records.append(ge.center([rec], cents[rec.language])[0])
    out_set = es.EmbeddingSet(
        model_id=dump.model_id, layer=dump.layer, dim=dump.dim, records=records
    )
    es.write_dump(out_set, args.output)
    sys.stdout.write(_json({"records": len(records), "centered_by": sorted(cents)}))
    return 0


def cmd_fit_projection(args) -> int:
    src = es.load(args.src)
    tgt = es.load(args.tgt)
    src_lang = src.records[0].language if src.records else ""
    tgt_lang = tgt.records[0].language if tgt.records else ""
    proj = ge.fit_projection(
        src, tgt, with_bias=args.bias, source_language=src_lang, target_language=tgt_lang
    )
    ge.write_projection(proj, args.output)
    sys.stdout.write(
        _json(
            {
                "source_language": src_lang,
                "target_language": tgt_lang,
                "residual_mse": proj.residual_mse,
                "regularized": proj.regularized,
            }
        )
    )
    return 0


def cmd_retrieve(args) -> int:
    inputs = _kv_pairs(args.inputs, "--inputs")
    if len(inputs) < 2:
        raise ConfigError("retrieve needs at least two --inputs lang=path")
    sets = {lang: es.load(path) for lang, path in inputs.items()}
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    centroids = _read_centroids(args.centroids) if args.centroids else None
    projections = None
    if args.projections:
        projections = {
            lang: ge.read_projection(path)
            for lang, path in _kv_pairs(args.projections, "--projections").items()
        }
    suite = rt.run_retrieval_suite(sets, modes=modes, centroids=centroids, projections=projections)
    payload = {
        "languages": suite.languages,
        "mode_averages": suite.mode_averages,
        "matrices": {mode: suite.accuracy_matrix(mode) for mode in suite.modes},
    }
    if args.format == "json":
        _emit(_json(payload), args.output)
    else:
        rows = []
        for mode in suite.modes:
            rows.append([f"# mode={mode}", f"average={_fmt(suite.mode_averages[mode])}"])
            rows.append(["query\\candidate"] + suite.languages)
            for lang, row in zip(suite.languages, suite.accuracy_matrix(mode)):
                rows.append([lang] + ["-" if a is None else _fmt(a) for a in row])
        _emit(_tsv(rows), args.output)
    return 0


def cmd_align(args) -> int:
    src = es.load(args.src)
    tgt = es.load(args.tgt)
    if len(src.records) != len(tgt.records):
        raise ValidationError(
            f"side lengths differ: {len(src.records)} vs {len(tgt.records)}"
        )
    golds = al.read_gold_file(args.gold, one_based=args.one_based) if args.gold else None
    if golds is not None and len(golds) != len(src.records):
        raise ValidationError(f"gold has {len(golds)} lines for {len(src.records)} pairs")
    links = [
        al.align_pair(s, t, weight=args.weight, kind=args.penalty)
        for s, t in zip(src.records, tgt.records)
    ]
    _emit("\n".join(al.format_links(ls) for ls in links) + "\n", args.output)
    if golds is not None:
        report = al.evaluate_corpus(links, golds)
        rows = [["pair", "precision", "recall", "f1"]]
        for idx, (p, r, f1) in enumerate(report["per_pair"]):
            rows.append([str(idx), _fmt(p), _fmt(r), _fmt(f1)])
        rows.append(
            ["corpus", _fmt(report["precision"]), _fmt(report["recall"]), _fmt(report["f1"])]
        )
        if args.format == "json":
            _emit(
                _json(
                    {
                        "per_pair": [list(t) for t in report["per_pair"]],
                        "precision": report["precision"],
                        "recall": report["recall"],
                        "f1": report["f1"],
                    }
                ),
                args.report,
            )
        else:
            _emit(_tsv(rows), args.report)
    return 0


def cmd_align_eval(args) -> int:
    preds = al.read_links_file(args.pred)
    golds = al.read_gold_file(args.gold, one_based=args.one_based)
    report = al.evaluate_corpus(preds, golds)
    if args.format == "json":
        _emit(
            _json(
                {
                    "per_pair": [list(t) for t in report["per_pair"]],
                    "precision": report["precision"],
                    "recall": report["recall"],
                    "f1": report["f1"],
                }
            ),
            args.output,
        )
    else:
        rows = [["pair", "precision", "recall", "f1"]]
        for idx, (p, r, f1) in enumerate(report["per_pair"]):
            rows.append([str(idx), _fmt(p), _fmt(r), _fmt(f1)])
        rows.append(
            ["corpus", _fmt(report["precision"]), _fmt(report["recall"]), _fmt(report["f1"])]
        )
        _emit(_tsv(rows), args.output)
    return 0


def cmd_tune_distortion(args) -> int:
    src = es.load(args.src)
    tgt = es.load(args.tgt)
    golds = al.read_gold_file(args.gold, one_based=args.one_based)
    grid = [float(x) for x in args.grid.split(",") if x.strip() != ""]
    if not grid:
        raise ConfigError("empty --grid")
    pairs = list(zip(src.records, tgt.records))
    scores = {}
    for weight in sorted(grid):
        preds = [al.align_pair(s, t, weight=weight, kind=args.penalty) for s, t in pairs]
        scores[str(weight)] = al.evaluate_corpus(preds, golds)["f1"]
    best = al.tune_distortion_weight(pairs, golds, grid, kind=args.penalty)
    _emit(_json({"best_weight": best, "penalty": args.penalty, "f1_by_weight": scores}), args.output)
    return 0


def _train_config(args) -> cl.TrainConfig:
    return cl.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        momentum=args.momentum,
        seed=args.seed,
    )


def cmd_langid_train(args) -> int:
    train = es.load(args.train)
    valid = es.load(args.valid)
    config = _train_config(args)
    model = cl.train_langid(train.records, valid.records, config)
    cl.save_langid_model(model, args.output, config=config)
    acc = cl.eval_langid(model, valid.records)
    sys.stdout.write(
        _json(
            {
                "labels": model.labels,
                "validation_accuracy": acc,
                "parameter_count": model.parameter_count,
            }
        )
    )
    return 0


def cmd_langid_eval(args) -> int:
    model = cl.load_langid_model(args.model)
    test = es.load(args.test)
    by_lang = {}
    for rec in test.records:
        by_lang.setdefault(rec.language, []).append(rec)
    per_lang = {lang: cl.eval_langid(model, recs) for lang, recs in sorted(by_lang.items())}
    payload = {
        "accuracy": cl.eval_langid(model, test.records),
        "per_language": per_lang,
        "count": len(test.records),
    }
    if args.format == "json":
        _emit(_json(payload), args.output)
    else:
        rows = [["language", "accuracy"]]
        rows += [[lang, _fmt(acc)] for lang, acc in per_lang.items()]
        rows.append(["all", _fmt(payload["accuracy"])])
        _emit(_tsv(rows), args.output)
    return 0


def cmd_cluster(args) -> int:
    dump = es.load(args.centroids)
    cents = [
        ge.LanguageCentroid(
            language=r.language, vector=np.asarray(r.vector, np.float64), sample_count=1
        )
        for r in dump.records
    ]
    families = cu.load_families(args.families)
    langs = [c.language for c in cents]
    if args.min_family_size > 0:
        kept = set(cu.filter_min_family_size(langs, families, args.min_family_size))
        cents = [c for c in cents if c.language in kept]
        langs = [c.language for c in cents]
    if not cents:
        raise ValidationError("no languages left after the family-size filter")
    n_families = len({families.family_of(l) for l in langs})
    k = args.k if args.k else n_families
    labels = cu.agglomerate(cents, k)
    score = cu.v_measure(labels, families)
    coords = cu.project_2d(cents)
    assign_rows = [["language", "cluster", "family"]]
    for lang in sorted(labels):
        assign_rows.append([lang, str(labels[lang]), families.family_of(lang)])
    coord_rows = [["language", "x", "y"]]
    for cent, (x, y) in zip(cents, coords):
        coord_rows.append([cent.language, repr(float(x)), repr(float(y))])
    with open(args.out_prefix + ".assignments.tsv", "w", encoding="utf-8") as fh:
        fh.write(_tsv(assign_rows))
    with open(args.out_prefix + ".coords.tsv", "w", encoding="utf-8") as fh:
        fh.write(_tsv(coord_rows))
    with open(args.out_prefix + ".scores.json", "w", encoding="utf-8") as fh:
        fh.write(
            _json(
                {
                    "homogeneity": score.homogeneity,
                    "completeness": score.completeness,
                    "v_measure": score.v_measure,
                    "k": k,
                    "n_languages": len(langs),
                }
            )
        )
    sys.stdout.write(
        _json({"k": k, "n_languages": len(langs), "v_measure": score.v_measure})
    )
    return 0


def cmd_qe(args) -> int:
    src = es.load(args.src)
    tgt = es.load(args.tgt)
    samples = cl.load_qe_tsv(args.samples, src, tgt)
    if args.method == "cosine":
        kwargs = {}
        if args.variant == "centered":
            if not args.centroids:
                raise ConfigError("centered variant needs --centroids")
            cents = _read_centroids(args.centroids)
            src_lang = src.records[0].language
            tgt_lang = tgt.records[0].language
            for lang in (src_lang, tgt_lang):
                if lang not in cents:
                    raise ConfigError(f"no centroid for language {lang!r}")
            kwargs = {"src_centroid": cents[src_lang], "tgt_centroid": cents[tgt_lang]}
        elif args.variant == "projected":
            if not args.projection:
                raise ConfigError("projected variant needs --projection")
            kwargs = {"projection": ge.read_projection(args.projection)}
        score = cl.qe_cosine_score(samples, variant=args.variant, **kwargs)
        _emit(
            _json({"method": "cosine", "variant": args.variant, "pearson": score, "n": len(samples)}),
            args.output,
        )
        return 0
    if not args.valid:
        raise ConfigError("regression method needs --valid samples")
    valid = cl.load_qe_tsv(args.valid, src, tgt)
    config = _train_config(args)
    model = cl.train_qe(samples, valid, mode=args.mode, config=config)
    if args.model_out:
        cl.save_qe_model(model, args.model_out, config=config)
    Xva, yva = cl.qe_inputs(valid, args.mode)
    score = cl.pearson(model.predict(Xva), yva)
    payload = {
        "method": "regression",
        "mode": args.mode,
        "valid_pearson": score,
        "parameter_count": model.parameter_count,
        "n_train": len(samples),
        "n_valid": len(valid),
    }
    if args.test:
        test = cl.load_qe_tsv(args.test, src, tgt)
        Xte, yte = cl.qe_inputs(test, args.mode)
        payload["test_pearson"] = cl.pearson(model.predict(Xte), yte)
    _emit(_json(payload), args.output)
    return 0


def cmd_synth(args) -> int:
    config = sy.SynthConfig(
        languages=tuple(x.strip() for x in args.languages.split(",") if x.strip()),
        n_sentences=args.count,
        dim=args.dim,
        offset_scale=args.offset_scale,
        noise_scale=args.noise,
        seed=args.seed,
    )
    sets = sy.generate_additive(config)
    import os

    os.makedirs(args.outdir, exist_ok=True)
    files = {}
    for lang, emb_set in sets.items():
        path = os.path.join(args.outdir, f"{lang}.memb")
        es.write_dump(emb_set, path)
        files[lang] = path
    sys.stdout.write(
        _json({"languages": list(config.languages), "files": files, "dim": config.dim})
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langneutral",
        description="Language-neutrality probes over embedding dumps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="pool token matrices into sentence vectors")
    p.add_argument("dump")
    p.add_argument("--pooling", choices=[es.POOL_MEAN, es.POOL_CLS], default=es.POOL_MEAN)
    p.add_argument("--include-special", action="store_true",
                   help="keep flagged special rows in mean pooling")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("centroids", help="per-language mean vectors of a dump")
    p.add_argument("dump")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_centroids)

    p = sub.add_parser("center", help="subtract per-language centroids")
    p.add_argument("dump")
    p.add_argument("centroids")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_center)

    p = sub.add_parser("fit-projection", help="least-squares map between parallel dumps")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("--bias", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_fit_projection)

    p = sub.add_parser("retrieve", help="nearest-neighbor retrieval over language pairs")
    p.add_argument("--inputs", action="append", required=True, metavar="LANG=PATH")
    p.add_argument("--modes", default="plain")
    p.add_argument("--centroids")
    p.add_argument("--projections", action="append", metavar="LANG=PATH")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("align", help="minimum-weight edge-cover word alignment")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("--weight", type=float, default=0.0)
    p.add_argument("--penalty", choices=list(al.PENALTY_KINDS), default="inverse")
    p.add_argument("--gold")
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--output")
    p.add_argument("--report")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("align-eval", help="P/R/F1 of predicted links against gold")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_align_eval)

    p = sub.add_parser("tune-distortion", help="grid-search the distortion weight")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("gold")
    p.add_argument("--grid", required=True, help="comma-separated weights")
    p.add_argument("--penalty", choices=list(al.PENALTY_KINDS), default="inverse")
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_tune_distortion)

    def add_train_flags(p):
        p.add_argument("--lr", type=float, default=0.01)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--max-epochs", type=int, default=100)
        p.add_argument("--patience", type=int, default=5)
        p.add_argument("--momentum", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("langid-train", help="train the linear language-ID probe")
    p.add_argument("train")
    p.add_argument("valid")
    p.add_argument("--output", required=True)
    add_train_flags(p)
    p.set_defaults(func=cmd_langid_train)

    p = sub.add_parser("langid-eval", help="accuracy of a trained language-ID model")
    p.add_argument("model")
    p.add_argument("test")
    p.add_argument("--format", choices=["tsv", "json"], default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_langid_eval)

    p = sub.add_parser("cluster", help="cluster language centroids against families")
    p.add_argument("centroids")
    p.add_argument("--families", help="language<TAB>family TSV (default: bundled table)")
    p.add_argument("--k", type=int, default=0, help="cluster count (default: #families)")
    p.add_argument("--min-family-size", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("qe", help="quality estimation against HTER")
    p.add_argument("--method", choices=["cosine", "regression"], default="cosine")
    p.add_argument("--samples", required=True, help="source_id<TAB>target_id<TAB>hter")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--variant", choices=["plain", "centered", "projected"], default="plain")
    p.add_argument("--centroids")
    p.add_argument("--projection")
    p.add_argument("--valid")
    p.add_argument("--test")
    p.add_argument("--mode", choices=list(cl.QE_INPUT_MODES), default="full")
    p.add_argument("--model-out", help="persist the trained regressor (regression method)")
    p.add_argument("--output")
    add_train_flags(p)
    p.set_defaults(func=cmd_qe)

    p = sub.add_parser("synth", help="generate additive-model synthetic dumps")
    p.add_argument("--languages", required=True, help="comma-separated codes")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--offset-scale", type=float, default=3.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(_json({"error": {"type": "config", "message": str(exc)}}))
        return EXIT_USAGE
    except (FormatError, CorruptionError, ValidationError, FileNotFoundError) as exc:
        kind = "format" if isinstance(exc, FormatError) else "data"
        sys.stderr.write(_json({"error": {"type": kind, "message": str(exc)}}))
        return EXIT_DATA
    except (TrainingError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(_json({"error": {"type": "numeric", "message": str(exc)}}))
        return EXIT_NUMERIC
    except LangNeutralError as exc:
        sys.stderr.write(_json({"error": {"type": "error", "message": str(exc)}}))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
