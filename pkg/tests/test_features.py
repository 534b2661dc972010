import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emofeats.errors import DuplicateId, EmptyTensor, KOutOfRange, ParseError, RangeViolation
from emofeats.features import (
    FeatureMatrix,
    build_feature_matrix,
    layer_feature_indices,
    max_pool,
    mean_pool,
    neural_feature_names,
    read_feature_csv,
    subset_rows,
    write_feature_csv,
)
from emofeats.net import ActivationTensor, ModelConfig
from oracles import loop_max_pool, loop_mean_pool


def tensor_of(values, uid="u"):
    return ActivationTensor(values=np.asarray(values, dtype=np.float64), utterance_id=uid)


class TestPooling:
    def test_all_ones(self):
        a = tensor_of(np.ones((2, 3, 4)))
        assert np.all(mean_pool(a).values == 1.0)
        assert np.all(max_pool(a).values == 1.0)

    def test_single_frame(self):
        vals = np.random.default_rng(0).normal(size=(2, 3, 1))
        np.testing.assert_array_equal(mean_pool(tensor_of(vals)).values, vals[:, :, 0].reshape(-1))

    def test_monotone_ramp_max_is_last_frame(self):
        base = np.random.default_rng(1).normal(size=(2, 3, 1))
        ramp = base + np.arange(5)[None, None, :] * 0.1
        np.testing.assert_allclose(max_pool(tensor_of(ramp)).values, ramp[:, :, -1].reshape(-1))

    def test_mean_against_loop(self):
        vals = np.random.default_rng(2).normal(size=(2, 3, 5))
        ref = loop_mean_pool(vals)
        assert np.max(np.abs(mean_pool(tensor_of(vals)).values - ref)) <= 1e-9

    def test_max_against_loop_exact(self):
        vals = np.random.default_rng(3).normal(size=(2, 3, 5))
        np.testing.assert_array_equal(max_pool(tensor_of(vals)).values, loop_max_pool(vals))

    def test_empty_tensor(self):
        with pytest.raises(EmptyTensor):
            mean_pool(tensor_of(np.zeros((2, 3, 0))))
        with pytest.raises(EmptyTensor):
            max_pool(tensor_of(np.zeros((2, 3, 0))))

    def test_constant_in_time_pools_agree(self):
        vals = np.repeat(np.random.default_rng(4).normal(size=(2, 3, 1)), 6, axis=2)
        # averaging n identical doubles can round in the last ulp
        np.testing.assert_allclose(
            mean_pool(tensor_of(vals)).values, max_pool(tensor_of(vals)).values, rtol=1e-14
        )

    @given(arrays(np.float64, (2, 4, 3), elements=st.floats(-1, 1)), st.permutations(range(4)))
    def test_channel_permutation_equivariance(self, vals, perm):
        perm = list(perm)
        a = tensor_of(vals)
        permuted = tensor_of(vals[:, perm, :])
        for pool in (mean_pool, max_pool):
            direct = pool(a).values.reshape(2, 4)[:, perm].reshape(-1)
            np.testing.assert_array_equal(pool(permuted).values, direct)

    def test_layer_of_mapping(self):
        vec = mean_pool(tensor_of(np.zeros((3, 4, 2))))
        assert vec.layer_of(0) == 0
        assert vec.layer_of(4) == 1
        assert vec.layer_of(11) == 2


class TestLayerIndices:
    CFG = ModelConfig()

    def test_first_three_layers(self):
        idx = layer_feature_indices(self.CFG, "first_k", 3)
        assert idx.size == 384
        assert idx.min() == 0 and idx.max() == 383

    def test_all(self):
        assert layer_feature_indices(self.CFG, "all").size == 1920

    def test_last_all_boundary(self):
        np.testing.assert_array_equal(
            layer_feature_indices(self.CFG, "last_k", 15), layer_feature_indices(self.CFG, "all")
        )

    def test_last_three(self):
        idx = layer_feature_indices(self.CFG, "last_k", 3)
        assert idx.min() == 12 * 128
        assert idx.size == 384

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRange):
            layer_feature_indices(self.CFG, "first_k", 16)
        with pytest.raises(KOutOfRange):
            layer_feature_indices(self.CFG, "first_k", 0)
        with pytest.raises(KOutOfRange):
            layer_feature_indices(self.CFG, "middle_k", 3)


def small_matrix():
    rng = np.random.default_rng(5)
    values = rng.normal(size=(4, 6))
    return FeatureMatrix(
        values=values,
        utterance_ids=[f"u{i}" for i in range(4)],
        speaker_ids=["a", "a", "b", "b"],
        sessions=[1, 1, 2, 2],
        valence=np.array([1.0, 2.5, 3.0, 5.0]),
        arousal=np.array([2.0, 2.0, 4.0, 4.5]),
        feature_names=neural_feature_names(6),
        feature_set_name="test",
    )


class TestFeatureMatrix:
    def test_invariants(self):
        fm = small_matrix()
        with pytest.raises(RangeViolation):
            FeatureMatrix(
                values=fm.values, utterance_ids=fm.utterance_ids, speaker_ids=fm.speaker_ids,
                sessions=fm.sessions, valence=np.array([0.5, 2, 3, 4]), arousal=fm.arousal,
                feature_names=fm.feature_names,
            )
        with pytest.raises(DuplicateId):
            FeatureMatrix(
                values=fm.values, utterance_ids=["u0", "u0", "u2", "u3"], speaker_ids=fm.speaker_ids,
                sessions=fm.sessions, valence=fm.valence, arousal=fm.arousal,
                feature_names=fm.feature_names,
            )

    def test_csv_round_trip_exact(self, tmp_path):
        fm = small_matrix()
        path = tmp_path / "f.csv"
        write_feature_csv(fm, path)
        back = read_feature_csv(path)
        assert back.values.tobytes() == fm.values.tobytes()
        assert back.utterance_ids == fm.utterance_ids
        assert back.speaker_ids == fm.speaker_ids
        assert back.sessions == fm.sessions
        np.testing.assert_array_equal(back.valence, fm.valence)
        assert back.feature_names == fm.feature_names

    def test_csv_header(self, tmp_path):
        path = tmp_path / "f.csv"
        write_feature_csv(small_matrix(), path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("utterance_id,speaker_id,session,valence,arousal,f0000")

    def test_read_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,spk,val\n1,2,3\n")
        with pytest.raises(ParseError):
            read_feature_csv(path)

    def test_subset_rows(self):
        fm = small_matrix()
        sub = subset_rows(fm, np.array([2, 3]))
        assert sub.utterance_ids == ["u2", "u3"]
        assert sub.n_rows == 2
        np.testing.assert_array_equal(sub.values, fm.values[2:])

    def test_rows_for_speaker(self):
        fm = small_matrix()
        np.testing.assert_array_equal(fm.rows_for_speaker("b"), [2, 3])


def test_build_feature_matrix():
    from emofeats.features import NeuralFeatureVector

    vecs = [NeuralFeatureVector(np.arange(6, dtype=np.float64) + i, f"u{i}", 3) for i in range(3)]
    meta = {f"u{i}": ("spk", 1, 2.0, 3.0) for i in range(3)}
    fm = build_feature_matrix(vecs, meta, feature_set_name="x")
    assert fm.n_rows == 3 and fm.n_features == 6
    assert fm.feature_set_name == "x"
    assert fm.feature_names[0] == "f0000"
