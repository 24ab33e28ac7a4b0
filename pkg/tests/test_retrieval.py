import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langneutral import geometry as ge
from langneutral import retrieval as rt
from langneutral.errors import ConfigError, ValidationError
from langneutral.synth import SynthConfig, generate_additive

from oracles import nearest_neighbor_ref


class TestRetrieve:
    def test_self_retrieval_perfect(self, rng):
        Q = rng.standard_normal((20, 8))
        res = rt.retrieve(Q, Q.copy())
        assert res.accuracy == 1.0
        assert res.predictions == list(range(20))

    def test_reversed_orthogonal_zero(self):
        C = np.eye(4)
        res = rt.retrieve(C[::-1].copy(), C)
        assert res.accuracy == 0.0
        assert res.predictions == [3, 2, 1, 0]

    def test_matches_double_loop_oracle(self, rng):
        base = rng.standard_normal((50, 10))
        queries = base + 0.05 * rng.standard_normal((50, 10))
        candidates = base + 0.05 * rng.standard_normal((50, 10))
        res = rt.retrieve(queries, candidates)
        assert res.predictions == nearest_neighbor_ref(queries, candidates)

    def test_zero_norm_named(self, rng):
        from langneutral.embstore import POOL_MEAN, SentenceVector

        qs = [
            SentenceVector("good", "aa", POOL_MEAN, [1.0, 0.0]),
            SentenceVector("degenerate", "aa", POOL_MEAN, [0.0, 0.0]),
        ]
        cs = [SentenceVector("c", "bb", POOL_MEAN, [1.0, 1.0])]
        with pytest.raises(ValidationError, match="degenerate"):
            rt.retrieve(qs, cs)

    def test_empty_rejected(self, rng):
        with pytest.raises(ValidationError):
            rt.retrieve(np.zeros((0, 3)), rng.standard_normal((2, 3)))

    @given(scale=st.floats(1e-2, 1e2), seed=st.integers(0, 9999))
    @settings(max_examples=25, deadline=None)
    def test_candidate_scaling_invariance(self, scale, seed):
        r = np.random.default_rng(seed)
        Q = r.standard_normal((8, 5))
        C = r.standard_normal((8, 5))
        assert rt.retrieve(Q, C).predictions == rt.retrieve(Q, scale * C).predictions

    def test_rotation_invariance(self, rng):
        Q = rng.standard_normal((12, 6))
        C = rng.standard_normal((12, 6))
        rot, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        assert rt.retrieve(Q, C).predictions == rt.retrieve(Q @ rot, C @ rot).predictions

    def test_centering_keeps_self_retrieval(self, rng):
        from helpers import make_sentence_vectors

        vecs = make_sentence_vectors(rng, n=15, dim=6)
        cent = ge.centroid(vecs)
        centered = ge.center(vecs, cent)
        assert rt.retrieve(centered, centered).accuracy == 1.0


def _suite_sets(seed=11, noise=0.1, offset=3.0, n=60, dim=16, langs=("aa", "bb", "cc")):
    cfg = SynthConfig(
        languages=langs, n_sentences=n, dim=dim, offset_scale=offset, noise_scale=noise, seed=seed
    )
    return generate_additive(cfg)


class TestSuite:
    def test_single_pair_matches_retrieve(self, rng):
        sets = _suite_sets(langs=("aa", "bb"))
        suite = rt.run_retrieval_suite(sets, modes=("plain",))
        direct = rt.retrieve(sets["aa"], sets["bb"])
        assert suite.results[("plain", "aa", "bb")].predictions == direct.predictions
        assert suite.results[("plain", "aa", "bb")].accuracy == direct.accuracy

    def test_centered_beats_plain_on_additive_data(self):
        sets = _suite_sets()
        centroids = {lang: ge.centroid(sets[lang]) for lang in sets}
        suite = rt.run_retrieval_suite(sets, modes=("plain", "centered"), centroids=centroids)
        assert suite.mode_averages["centered"] >= suite.mode_averages["plain"]
        assert suite.mode_averages["centered"] > 0.9

    def test_projected_mode_on_linear_spaces_is_perfect(self, rng):
        dim, n = 12, 50
        base = rng.standard_normal((n, dim))
        maps = {"bb": rng.standard_normal((dim, dim)), "cc": rng.standard_normal((dim, dim))}
        sets = {
            "aa": base,
            "bb": base @ np.linalg.inv(maps["bb"]).T,
            "cc": base @ np.linalg.inv(maps["cc"]).T,
        }
        projections = {
            lang: ge.fit_projection(sets[lang], sets["aa"], target_language="aa")
            for lang in ("bb", "cc")
        }
        suite = rt.run_retrieval_suite(sets, modes=("projected",), projections=projections)
        assert suite.mode_averages["projected"] == 1.0

    def test_missing_centroid_is_config_error(self):
        sets = _suite_sets(langs=("aa", "bb"))
        with pytest.raises(ConfigError):
            rt.run_retrieval_suite(sets, modes=("centered",))
        with pytest.raises(ConfigError):
            rt.run_retrieval_suite(
                sets, modes=("centered",), centroids={"aa": ge.centroid(sets["aa"])}
            )

    def test_missing_projection_is_config_error(self):
        sets = _suite_sets(langs=("aa", "bb", "cc"))
        with pytest.raises(ConfigError):
            rt.run_retrieval_suite(sets, modes=("projected",))

    def test_accuracy_matrix_layout(self):
        sets = _suite_sets(langs=("aa", "bb"))
        suite = rt.run_retrieval_suite(sets, modes=("plain",))
        matrix = suite.accuracy_matrix("plain")
        assert matrix[0][0] is None and matrix[1][1] is None
        assert matrix[0][1] == suite.results[("plain", "aa", "bb")].accuracy

    def test_centered_strictly_better_with_distinct_offsets(self):
        sets = _suite_sets(seed=3, noise=0.3, offset=3.0, n=80)
        centroids = {lang: ge.centroid(sets[lang]) for lang in sets}
        suite = rt.run_retrieval_suite(sets, modes=("plain", "centered"), centroids=centroids)
        assert suite.mode_averages["centered"] > suite.mode_averages["plain"]
