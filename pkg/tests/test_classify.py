import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langneutral import classify as cl
from langneutral import geometry as ge
from langneutral.embstore import POOL_MEAN, SentenceVector
from langneutral.errors import ValidationError
from langneutral.synth import SynthConfig, generate_additive

from oracles import central_difference_grad, pearson_ref


def _labeled(rng, lang, n, dim, shift):
    return [
        SentenceVector(f"{lang}{i}", lang, POOL_MEAN, rng.standard_normal(dim) + shift)
        for i in range(n)
    ]


class TestTrainLangid:
    def test_linearly_separable_two_labels(self, rng):
        e = np.zeros(4)
        a = _labeled(rng, "aa", 100, 4, shift=np.array([3.0, 0, 0, 0]))
        b = _labeled(rng, "bb", 100, 4, shift=np.array([-3.0, 0, 0, 0]))
        train = a[:80] + b[:80]
        valid = a[80:] + b[80:]
        model = cl.train_langid(train, valid, cl.TrainConfig(max_epochs=30))
        assert cl.eval_langid(model, valid) == 1.0

    def test_six_synthetic_languages(self):
        sets = generate_additive(
            SynthConfig(
                languages=("aa", "bb", "cc", "dd", "ee", "ff"),
                n_sentences=120,
                dim=16,
                offset_scale=3.0,
                noise_scale=0.1,
                seed=9,
            )
        )
        train, valid = [], []
        for recs in sets.values():
            train += recs.records[:100]
            valid += recs.records[100:]
        model = cl.train_langid(train, valid, cl.TrainConfig(max_epochs=50))
        assert cl.eval_langid(model, valid) >= 0.99

    def test_centered_languages_near_chance(self):
        sets = generate_additive(
            SynthConfig(
                languages=("aa", "bb", "cc", "dd", "ee", "ff"),
                n_sentences=120,
                dim=16,
                offset_scale=3.0,
                noise_scale=0.1,
                seed=9,
            )
        )
        train, valid = [], []
        for lang, recs in sets.items():
            centered = ge.center(recs.records, ge.centroid(recs.records))
            train += centered[:100]
            valid += centered[100:]
        model = cl.train_langid(train, valid, cl.TrainConfig(max_epochs=50))
        assert cl.eval_langid(model, valid) <= 0.40

    def test_single_label_rejected(self, rng):
        vecs = _labeled(rng, "aa", 10, 4, 0.0)
        with pytest.raises(ValidationError):
            cl.train_langid(vecs, vecs)

    def test_deterministic_under_seed(self, rng):
        a = _labeled(rng, "aa", 30, 6, np.array([2.0, 0, 0, 0, 0, 0]))
        b = _labeled(rng, "bb", 30, 6, np.array([-2.0, 0, 0, 0, 0, 0]))
        cfg = cl.TrainConfig(max_epochs=10, seed=7)
        m1 = cl.train_langid(a + b, a + b, cfg)
        m2 = cl.train_langid(a + b, a + b, cfg)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        np.testing.assert_array_equal(m1.biases, m2.biases)

    def test_parameter_count(self, rng):
        a = _labeled(rng, "aa", 20, 8, np.array([2.0] + [0.0] * 7))
        b = _labeled(rng, "bb", 20, 8, np.array([-2.0] + [0.0] * 7))
        model = cl.train_langid(a + b, a + b, cl.TrainConfig(max_epochs=2))
        assert model.parameter_count == 8 * 2 + 2


class TestPredictLang:
    def test_bias_only_model(self):
        model = cl.LinearSoftmaxModel(
            weights=np.zeros((3, 2)), biases=np.array([0.0, 1.0]), labels=["cs", "de"]
        )
        assert cl.predict_lang(model, [5.0, -2.0, 0.1]) == "de"

    def test_trained_model_recalls_training_point(self, rng):
        a = _labeled(rng, "aa", 50, 4, np.array([3.0, 0, 0, 0]))
        b = _labeled(rng, "bb", 50, 4, np.array([-3.0, 0, 0, 0]))
        model = cl.train_langid(a + b, a + b, cl.TrainConfig(max_epochs=30))
        assert cl.predict_lang(model, a[0].vector) == "aa"

    def test_uniform_bias_shift_keeps_argmax(self, rng):
        W = rng.standard_normal((5, 4))
        b = rng.standard_normal(4)
        model = cl.LinearSoftmaxModel(W, b, ["a", "b", "c", "d"])
        shifted = cl.LinearSoftmaxModel(W, b + 13.5, ["a", "b", "c", "d"])
        for _ in range(20):
            v = rng.standard_normal(5)
            assert cl.predict_lang(model, v) == cl.predict_lang(shifted, v)

    def test_positive_scaling_keeps_argmax(self, rng):
        W = rng.standard_normal((5, 4))
        b = rng.standard_normal(4)
        model = cl.LinearSoftmaxModel(W, b, ["a", "b", "c", "d"])
        scaled = cl.LinearSoftmaxModel(3.0 * W, 3.0 * b, ["a", "b", "c", "d"])
        for _ in range(20):
            v = rng.standard_normal(5)
            assert cl.predict_lang(model, v) == cl.predict_lang(scaled, v)

    def test_tie_prefers_first_label(self):
        model = cl.LinearSoftmaxModel(
            weights=np.zeros((2, 3)), biases=np.zeros(3), labels=["aa", "bb", "cc"]
        )
        assert cl.predict_lang(model, [1.0, 1.0]) == "aa"

    def test_dim_mismatch_rejected(self):
        model = cl.LinearSoftmaxModel(np.zeros((3, 2)), np.zeros(2), ["a", "b"])
        with pytest.raises(ValidationError):
            cl.predict_lang(model, [1.0, 2.0])


class TestModelSerialization:
    def test_round_trip(self, rng, tmp_path):
        a = _labeled(rng, "aa", 30, 6, np.array([2.0, 0, 0, 0, 0, 0]))
        b = _labeled(rng, "bb", 30, 6, np.array([-2.0, 0, 0, 0, 0, 0]))
        cfg = cl.TrainConfig(max_epochs=5)
        model = cl.train_langid(a + b, a + b, cfg)
        path = tmp_path / "model.memb"
        cl.save_langid_model(model, path, config=cfg)
        back = cl.load_langid_model(path)
        assert back.labels == model.labels
        np.testing.assert_allclose(back.weights, model.weights, atol=1e-6)
        np.testing.assert_allclose(back.biases, model.biases, atol=1e-12)
        import json

        sidecar = json.loads((tmp_path / "model.memb.json").read_text())
        assert sidecar["training_config"]["max_epochs"] == 5
        assert sidecar["seed"] == cfg.seed

    def test_qe_model_round_trip(self, rng, tmp_path):
        X = rng.standard_normal((12, 6))
        y = rng.standard_normal(12)
        samples = [cl.QESample(x, x, t) for x, t in zip(X, y)]
        cfg = cl.TrainConfig(max_epochs=10, seed=4)
        model = cl.train_qe(samples, samples, mode="src_only", config=cfg)
        path = tmp_path / "qe.memb"
        cl.save_qe_model(model, path, config=cfg)
        back = cl.load_qe_model(path)
        assert back.input_mode == "src_only"
        np.testing.assert_allclose(back.predict(X), model.predict(X), atol=1e-5)
        import json

        sidecar = json.loads((tmp_path / "qe.memb.json").read_text())
        assert sidecar["activation"] == "relu"
        assert sidecar["hidden_width"] == 256

    def test_full_scale_langid_parameter_count(self):
        # dim 768 x 73 languages: 768*73 + 73 = 56137 parameters
        model = cl.LinearSoftmaxModel(
            weights=np.zeros((768, 73)), biases=np.zeros(73), labels=[f"l{i}" for i in range(73)]
        )
        assert model.parameter_count == 56137


class TestTrainQe:
    def test_overfits_twenty_samples(self, rng):
        X = rng.standard_normal((20, 16))
        y = rng.standard_normal(20)
        samples = [cl.QESample(x, x, t) for x, t in zip(X, y)]
        cfg = cl.TrainConfig(learning_rate=0.01, max_epochs=3000, patience=3000, seed=1)
        model = cl.train_qe(samples, samples, mode="src_only", config=cfg)
        pred = model.predict(X)
        assert cl.pearson(pred, y) >= 0.99

    def test_constant_targets(self, rng):
        X = rng.standard_normal((30, 8))
        samples = [cl.QESample(x, x, 0.7) for x in X]
        model = cl.train_qe(samples, samples, mode="src_only",
                            config=cl.TrainConfig(max_epochs=50))
        assert np.abs(model.predict(X) - 0.7).max() < 1e-3

    def test_full_mode_concatenates(self, rng):
        samples = [
            cl.QESample(rng.standard_normal(768), rng.standard_normal(768), 0.5)
            for _ in range(4)
        ]
        X, y = cl.qe_inputs(samples, "full")
        assert X.shape == (4, 1536)
        model = cl.train_qe(samples, samples, mode="full", config=cl.TrainConfig(max_epochs=1))
        assert model.w1.shape == (1536, cl.HIDDEN_WIDTH)
        assert model.parameter_count == 1536 * 256 + 256 + 256 + 1

    def test_src_only_parameter_count_matches_report(self, rng):
        # 768-dim single-side model: 768*256 + 256 + 256 + 1 = 197k parameters
        samples = [cl.QESample(rng.standard_normal(768), rng.standard_normal(768), 0.1)
                   for _ in range(3)]
        model = cl.train_qe(samples, samples, mode="src_only",
                            config=cl.TrainConfig(max_epochs=1))
        assert model.parameter_count == 768 * 256 + 256 + 256 + 1 == 197121

    def test_deterministic_under_seed(self, rng):
        X = rng.standard_normal((10, 6))
        y = rng.standard_normal(10)
        samples = [cl.QESample(x, x, t) for x, t in zip(X, y)]
        cfg = cl.TrainConfig(max_epochs=20, seed=3)
        m1 = cl.train_qe(samples, samples, mode="tgt_only", config=cfg)
        m2 = cl.train_qe(samples, samples, mode="tgt_only", config=cfg)
        np.testing.assert_array_equal(m1.w1, m2.w1)
        np.testing.assert_array_equal(m1.w2, m2.w2)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            cl.train_qe([], [], mode="full")


class TestPearson:
    def test_identity(self, rng):
        x = rng.standard_normal(50)
        assert abs(cl.pearson(x, x) - 1.0) < 1e-12

    def test_negative_affine(self, rng):
        x = rng.standard_normal(50)
        assert abs(cl.pearson(x, -2 * x + 7) + 1.0) < 1e-12

    def test_hand_computed(self):
        assert cl.pearson([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-12)

    def test_matches_reference(self, rng):
        for _ in range(30):
            x = rng.standard_normal(20)
            y = rng.standard_normal(20)
            assert abs(cl.pearson(x, y) - pearson_ref(list(x), list(y))) < 1e-12

    def test_constant_rejected(self):
        with pytest.raises(ValidationError):
            cl.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_too_short_rejected(self):
        with pytest.raises(ValidationError):
            cl.pearson([1.0], [2.0])

    @given(
        a=st.floats(0.1, 10),
        b=st.floats(-10, 10),
        seed=st.integers(0, 9999),
    )
    @settings(max_examples=40, deadline=None)
    def test_positive_affine_invariance(self, a, b, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal(15)
        y = r.standard_normal(15)
        assert abs(cl.pearson(a * x + b, y) - cl.pearson(x, y)) < 1e-12

    def test_antisymmetric_under_negation(self, rng):
        x = rng.standard_normal(15)
        y = rng.standard_normal(15)
        assert abs(cl.pearson(-x, y) + cl.pearson(x, y)) < 1e-12


class TestGradients:
    def test_softmax_gradients_match_finite_differences(self):
        for seed in range(20):
            r = np.random.default_rng(seed)
            n, dim, n_labels = 7, 5, 4
            X = r.standard_normal((n, dim))
            y = r.integers(0, n_labels, n)
            W = 0.5 * r.standard_normal((dim, n_labels))
            b = 0.1 * r.standard_normal(n_labels)
            _, dW, db = cl.softmax_xent_loss_grad(W, b, X, y)
            analytic = np.concatenate([dW.ravel(), db])
            theta0 = np.concatenate([W.ravel(), b])

            def f(theta):
                Wt = theta[: dim * n_labels].reshape(dim, n_labels)
                return cl.softmax_xent_loss_grad(Wt, theta[dim * n_labels :], X, y)[0]

            fd = central_difference_grad(f, theta0, step=1e-5)
            rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(analytic), np.linalg.norm(fd))
            assert rel < 1e-4

    def test_mlp_gradients_match_finite_differences(self):
        for seed in range(100, 120):
            r = np.random.default_rng(seed)
            n, dim, hid = 6, 4, 5
            X = r.standard_normal((n, dim))
            y = r.standard_normal(n)
            w1 = r.standard_normal((dim, hid))
            b1 = 0.1 * r.standard_normal(hid)
            w2 = r.standard_normal(hid)
            b2 = 0.3
            _, grads = cl.mlp_mse_loss_grad((w1, b1, w2, b2), X, y)
            analytic = np.concatenate([grads[0].ravel(), grads[1], grads[2], [grads[3]]])
            theta0 = np.concatenate([w1.ravel(), b1, w2, [b2]])

            def f(theta):
                i = dim * hid
                params = (
                    theta[:i].reshape(dim, hid),
                    theta[i : i + hid],
                    theta[i + hid : i + 2 * hid],
                    float(theta[-1]),
                )
                return cl.mlp_mse_loss_grad(params, X, y)[0]

            fd = central_difference_grad(f, theta0, step=1e-5)
            rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(analytic), np.linalg.norm(fd))
            assert rel < 1e-4

    def test_full_batch_loss_monotone_on_convex_problem(self, rng):
        # convex softmax objective, small fixed step: loss may never rise
        X = np.vstack([rng.standard_normal((30, 4)) + [2, 0, 0, 0],
                       rng.standard_normal((30, 4)) - [2, 0, 0, 0]])
        y = np.array([0] * 30 + [1] * 30)
        W = np.zeros((4, 2))
        b = np.zeros(2)
        last = np.inf
        for _ in range(200):
            loss, dW, db = cl.softmax_xent_loss_grad(W, b, X, y)
            assert loss <= last + 1e-12
            last = loss
            W -= 1e-3 * dW
            b -= 1e-3 * db


class TestQeCosineScore:
    def test_self_correlation(self, rng):
        samples = []
        for _ in range(30):
            s = rng.standard_normal(8)
            t = rng.standard_normal(8)
            samples.append(cl.QESample(s, t, ge.cosine_distance(s, t)))
        assert cl.qe_cosine_score(samples, "plain") == pytest.approx(1.0, abs=1e-12)

    def test_independent_hter_uncorrelated(self):
        r = np.random.default_rng(123)
        samples = [
            cl.QESample(r.standard_normal(8), r.standard_normal(8), float(r.random()))
            for _ in range(1000)
        ]
        assert abs(cl.qe_cosine_score(samples, "plain")) < 0.1

    def test_projected_variant_on_linear_spaces(self, rng):
        dim = 10
        A = rng.standard_normal((dim, dim))
        proj = ge.LinearProjection(matrix=A)
        samples = []
        for _ in range(50):
            src = rng.standard_normal(dim)
            tgt = rng.standard_normal(dim)
            true_d = ge.cosine_distance(A @ src, tgt)
            samples.append(cl.QESample(src, tgt, true_d))
        score = cl.qe_cosine_score(samples, "projected", projection=proj)
        assert score >= 0.99

    def test_centered_variant_needs_centroids(self, rng):
        samples = [cl.QESample(rng.standard_normal(4), rng.standard_normal(4), 0.2)]
        with pytest.raises(ValidationError):
            cl.qe_cosine_score(samples, "centered")

    def test_centered_variant(self, rng):
        src_c = ge.LanguageCentroid("aa", rng.standard_normal(6), 1)
        tgt_c = ge.LanguageCentroid("bb", rng.standard_normal(6), 1)
        samples = []
        for _ in range(25):
            s = rng.standard_normal(6) + src_c.vector
            t = rng.standard_normal(6) + tgt_c.vector
            samples.append(cl.QESample(s, t, ge.cosine_distance(s - src_c.vector, t - tgt_c.vector)))
        score = cl.qe_cosine_score(samples, "centered", src_centroid=src_c, tgt_centroid=tgt_c)
        assert score == pytest.approx(1.0, abs=1e-9)


class TestQeTsv:
    def test_loads_by_id(self, rng, tmp_path):
        from helpers import make_sentence_set

        src = make_sentence_set(rng, n=3, dim=4, language="en", model_id="m")
        tgt = make_sentence_set(rng, n=3, dim=4, language="de", model_id="m")
        path = tmp_path / "qe.tsv"
        path.write_text("s0000\ts0001\t0.25\ns0002\ts0000\t0.75\n")
        samples = cl.load_qe_tsv(path, src, tgt)
        assert len(samples) == 2
        np.testing.assert_array_equal(
            samples[0].source_vector, np.asarray(src.records[0].vector, np.float64)
        )
        assert samples[1].hter == 0.75

    def test_unknown_id_rejected(self, rng, tmp_path):
        from helpers import make_sentence_set

        src = make_sentence_set(rng, n=1, dim=4)
        tgt = make_sentence_set(rng, n=1, dim=4)
        path = tmp_path / "qe.tsv"
        path.write_text("nope\ts0000\t0.5\n")
        with pytest.raises(ValidationError):
            cl.load_qe_tsv(path, src, tgt)
