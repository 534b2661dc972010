import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from emofeats.errors import IoFailure, LengthMismatch, ShapeMismatch, TooFewUtterances, ZeroVariance
from emofeats.features import FeatureMatrix, neural_feature_names
from emofeats.net import ModelConfig
from emofeats.stats import correlation_map, export_heatmap_csv, pearson, read_heatmap_csv
from oracles import loop_pearson


class TestPearson:
    def test_perfect_positive(self):
        assert pearson(np.array([1.0, 2, 3]), np.array([2.0, 4, 6])) == 1.0

    def test_perfect_negative(self):
        assert pearson(np.array([1.0, 2, 3]), np.array([3.0, 2, 1])) == -1.0

    def test_hand_computed_value(self):
        # cov 4.0, both deviation norms sqrt(5)
        r = pearson(np.array([1.0, 2, 3, 4]), np.array([1.0, 3, 2, 4]))
        assert abs(r - 0.8) < 1e-12

    def test_against_loop_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=10)
            y = rng.normal(size=10)
            assert abs(pearson(x, y) - loop_pearson(list(x), list(y))) < 1e-12

    def test_errors(self):
        with pytest.raises(ZeroVariance):
            pearson(np.ones(5), np.arange(5.0))
        with pytest.raises(ZeroVariance):
            pearson(np.arange(5.0), np.full(5, 2.0))
        with pytest.raises(LengthMismatch):
            pearson(np.arange(4.0), np.arange(5.0))
        with pytest.raises(LengthMismatch):
            pearson(np.array([1.0]), np.array([2.0]))

    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=30),
        st.floats(0.1, 50),
        st.floats(-20, 20),
    )
    def test_affine_invariance(self, xs, a, b):
        rng = np.random.default_rng(abs(hash(tuple(xs))) % 2**32)
        x = np.array(xs)
        y = rng.normal(size=len(xs))
        assume(np.std(x) > 1e-6 and np.std(y) > 1e-6)
        r0 = pearson(x, y)
        assert abs(pearson(a * x + b, y) - r0) < 1e-7
        assert abs(pearson(-a * x + b, y) + r0) < 1e-7
        assert abs(pearson(y, x) - r0) < 1e-12

    def test_self_correlation_sign(self):
        x = np.array([0.5, 1.5, -2.0, 3.0])
        assert pearson(x, 2.5 * x + 1) == 1.0
        assert pearson(x, -0.5 * x + 2) == -1.0


def speaker_matrix(n_rows=8, cfg=None, rng_seed=1):
    cfg = cfg or ModelConfig(n_mfcc=4, channels=4, n_blocks=1, layers_per_block=3, kernel_size=3)
    rng = np.random.default_rng(rng_seed)
    d = cfg.total_units
    values = rng.normal(size=(n_rows, d))
    return cfg, FeatureMatrix(
        values=values,
        utterance_ids=[f"u{i}" for i in range(n_rows)],
        speaker_ids=["s1"] * n_rows,
        sessions=[1] * n_rows,
        valence=np.linspace(1.5, 4.5, n_rows),
        arousal=rng.uniform(1, 5, n_rows),
        feature_names=neural_feature_names(d),
    )


class TestCorrelationMap:
    def test_shape_default_config(self):
        cfg = ModelConfig()
        rng = np.random.default_rng(2)
        fm = FeatureMatrix(
            values=rng.normal(size=(5, 1920)),
            utterance_ids=[f"u{i}" for i in range(5)],
            speaker_ids=["s"] * 5,
            sessions=[1] * 5,
            valence=np.linspace(1, 5, 5),
            arousal=np.linspace(2, 4, 5),
            feature_names=neural_feature_names(1920),
        )
        m = correlation_map(fm, "valence", cfg)
        assert m.values.shape == (15, 128)
        assert np.max(np.abs(m.values)) <= 1.0

    def test_constant_target_all_degenerate(self):
        cfg, fm = speaker_matrix()
        fm.valence[:] = 3.0
        m = correlation_map(fm, "valence", cfg)
        assert m.degenerate_count == cfg.total_units
        assert np.all(m.values == 0.0)

    def test_feature_copy_of_target(self):
        cfg, fm = speaker_matrix()
        fm.values[:, 7] = fm.valence
        m = correlation_map(fm, "valence", cfg)
        layer, ch = divmod(7, cfg.channels)
        assert m.values[layer, ch] == 1.0

    def test_too_few_utterances(self):
        cfg, fm = speaker_matrix(n_rows=8)
        from emofeats.features import subset_rows

        with pytest.raises(TooFewUtterances):
            correlation_map(subset_rows(fm, np.array([0])), "valence", cfg)

    def test_multi_speaker_rejected(self):
        cfg, fm = speaker_matrix()
        fm.speaker_ids[0] = "other"
        with pytest.raises(ShapeMismatch):
            correlation_map(fm, "valence", cfg)

    def test_slicing_consistency_with_layer_indices(self):
        # map of the first 3 layers == first 3 rows of the full map
        from emofeats.features import layer_feature_indices

        cfg, fm = speaker_matrix()
        m = correlation_map(fm, "arousal", cfg)
        idx = layer_feature_indices(cfg, "first_k", 2)
        flat = m.values.reshape(-1)
        np.testing.assert_array_equal(flat[idx], m.values[:2].reshape(-1))


class TestHeatmapCsv:
    def test_round_trip(self, tmp_path):
        cfg, fm = speaker_matrix()
        m = correlation_map(fm, "valence", cfg)
        path = tmp_path / "h.csv"
        export_heatmap_csv(m, path)
        back = read_heatmap_csv(path)
        assert back.values.shape == m.values.shape
        assert np.max(np.abs(back.values - m.values)) <= 1e-9
        assert back.speaker_id == "s1"
        assert back.dimension_name == "valence"
        assert back.degenerate_count == m.degenerate_count

    def test_layout(self, tmp_path):
        cfg, fm = speaker_matrix()
        m = correlation_map(fm, "arousal", cfg)
        path = tmp_path / "h.csv"
        export_heatmap_csv(m, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# speaker=s1"
        assert lines[1] == "# dimension=arousal"
        assert lines[2].startswith("# degenerate=")
        data_lines = lines[3:]
        assert len(data_lines) == cfg.total_layers
        assert all(len(line.split(",")) == cfg.channels for line in data_lines)

    def test_empty_path(self):
        cfg, fm = speaker_matrix()
        m = correlation_map(fm, "valence", cfg)
        with pytest.raises(IoFailure):
            export_heatmap_csv(m, "")
