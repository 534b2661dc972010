import json

import numpy as np
import pytest

from emofeats.cli import main
from emofeats.features import read_feature_csv
from emofeats.stats import read_heatmap_csv
from emofeats.weights import read_weights, write_weights
from conftest import make_tone
from emofeats.audio import write_wav
from test_net import zero_weights

ARCH = ["--n-mfcc", "20", "--channels", "8", "--blocks", "1", "--layers-per-block", "3"]
RATE = 16000


@pytest.fixture()
def corpus(tmp_path):
    """Six short utterances, three speakers, plus a manifest."""
    rng = np.random.default_rng(20)
    rows = ["utterance_id,session,speaker_id,wav_path,valence,arousal"]
    for i in range(6):
        uid = f"utt{i}"
        freq = 200.0 + 130.0 * i
        tone = make_tone(freq, 0.12, RATE, amplitude=0.3)
        tone += rng.normal(size=tone.size) * 0.02
        write_wav(tmp_path / f"{uid}.wav", tone, RATE)
        valence = 1.5 + 0.5 * i
        arousal = 4.5 - 0.5 * i
        rows.append(f"{uid},1,spk{i % 3},{uid}.wav,{valence},{arousal}")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return tmp_path, manifest


def test_synth_weights_round_trip(tmp_path, capsys):
    out = tmp_path / "w.gcuw"
    assert main(["synth-weights", *ARCH, "--seed", "42", "--out", str(out)]) == 0
    assert "checksum" in capsys.readouterr().out
    cfg, _ = read_weights(out)
    assert cfg.channels == 8
    assert (tmp_path / "w.gcuw.run.json").exists()


def test_synth_weights_deterministic(tmp_path):
    a, b = tmp_path / "a.gcuw", tmp_path / "b.gcuw"
    main(["synth-weights", *ARCH, "--seed", "7", "--out", str(a)])
    main(["synth-weights", *ARCH, "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_synth_weights_unwritable_path(tmp_path):
    assert main(["synth-weights", *ARCH, "--seed", "1", "--out", str(tmp_path / "nodir" / "w.gcuw")]) == 1


def test_extract_shape_and_determinism(corpus, tmp_path):
    root, manifest = corpus
    weights = root / "w.gcuw"
    main(["synth-weights", *ARCH, "--seed", "42", "--out", str(weights)])

    out1 = root / "features1.csv"
    out2 = root / "features2.csv"
    assert main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(out1)]) == 0
    assert main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(out2)]) == 0
    fm = read_feature_csv(out1)
    assert fm.n_rows == 6
    assert fm.n_features == 24  # 3 layers x 8 channels
    assert out1.read_bytes() == out2.read_bytes()
    record = json.loads((root / "features1.csv.run.json").read_text())
    assert record["command"] == "extract"
    assert "weights" in record["inputs"]


def test_extract_zero_weights_zero_features(corpus):
    root, manifest = corpus
    from emofeats.net import ModelConfig

    cfg = ModelConfig(n_mfcc=20, channels=8, n_blocks=1, layers_per_block=3)
    weights = root / "zero.gcuw"
    write_weights(zero_weights(cfg), cfg, weights)
    out = root / "zero_features.csv"
    assert main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(out)]) == 0
    fm = read_feature_csv(out)
    assert np.all(fm.values == 0.0)


def test_extract_missing_wav_refuses_output(corpus):
    root, manifest = corpus
    (root / "utt3.wav").unlink()
    weights = root / "w.gcuw"
    main(["synth-weights", *ARCH, "--seed", "42", "--out", str(weights)])
    out = root / "features.csv"
    assert main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(out)]) == 1
    assert not out.exists()


def test_pool_max_equals_mean_for_single_frame(tmp_path):
    # 100-sample utterances produce exactly one frame, so activations are
    # constant in time and the two pooling modes must agree
    rng = np.random.default_rng(21)
    rows = ["utterance_id,session,speaker_id,wav_path,valence,arousal"]
    for i in range(3):
        uid = f"u{i}"
        write_wav(tmp_path / f"{uid}.wav", rng.uniform(-0.4, 0.4, size=100), RATE)
        rows.append(f"{uid},1,s{i},{uid}.wav,3.0,3.0")
    manifest = tmp_path / "m.csv"
    manifest.write_text("\n".join(rows) + "\n")
    weights = tmp_path / "w.gcuw"
    main(["synth-weights", *ARCH, "--seed", "3", "--out", str(weights)])

    mean_out = tmp_path / "mean.csv"
    max_out = tmp_path / "max.csv"
    main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(mean_out), "--pool", "mean"])
    main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(max_out), "--pool", "max"])
    a = read_feature_csv(mean_out)
    b = read_feature_csv(max_out)
    np.testing.assert_array_equal(a.values, b.values)


def test_extract_parallel_matches_serial(corpus):
    root, manifest = corpus
    weights = root / "w.gcuw"
    main(["synth-weights", *ARCH, "--seed", "42", "--out", str(weights)])
    serial = root / "serial.csv"
    parallel = root / "parallel.csv"
    main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(serial)])
    main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(parallel), "--workers", "2"])
    assert serial.read_bytes() == parallel.read_bytes()


@pytest.fixture()
def extracted(corpus):
    root, manifest = corpus
    weights = root / "w.gcuw"
    main(["synth-weights", *ARCH, "--seed", "42", "--out", str(weights)])
    features = root / "features.csv"
    main(["extract", "--weights", str(weights), "--manifest", str(manifest), "--out", str(features)])
    return root, manifest, features


def test_correlate(extracted):
    root, manifest, features = extracted
    out = root / "heat.csv"
    code = main(["correlate", *ARCH, "--features", str(features), "--speaker", "spk0",
                 "--dim", "valence", "--out", str(out)])
    assert code == 0
    m = read_heatmap_csv(out)
    assert m.values.shape == (3, 8)
    assert m.speaker_id == "spk0"


def test_correlate_unknown_speaker(extracted):
    root, manifest, features = extracted
    code = main(["correlate", *ARCH, "--features", str(features), "--speaker", "ghost",
                 "--dim", "valence", "--out", str(root / "h.csv")])
    assert code == 1


def test_evaluate_table_rows(extracted):
    root, manifest, features = extracted
    baseline = root / "baseline.csv"
    rng = np.random.default_rng(22)
    fm = read_feature_csv(features)
    lines = ["utterance_id,speaker_id,session,valence,arousal,e0,e1,e2"]
    for i, uid in enumerate(fm.utterance_ids):
        vals = ",".join(repr(float(v)) for v in rng.normal(size=3))
        lines.append(f"{uid},{fm.speaker_ids[i]},1,{float(fm.valence[i])!r},{float(fm.arousal[i])!r},{vals}")
    baseline.write_text("\n".join(lines) + "\n")

    out_prefix = str(root / "report")
    code = main([
        "evaluate", *ARCH, "--features", str(features), "--manifest", str(manifest),
        "--baseline", str(baseline),
        "--layers", "first:1", "--layers", "last:1", "--layers", "all",
        "--k", "4", "--out", out_prefix,
    ])
    assert code == 0
    summary = (root / "report_summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 4  # header + first, last, all, baseline
    table = (root / "report_summary.txt").read_text()
    assert "neural-first1" in table and "baseline" in table
    folds = (root / "report_folds.csv").read_text().splitlines()
    assert len(folds) == 1 + 4 * 3 * 2  # sets x speakers x dimensions


def test_evaluate_k_too_large(extracted):
    root, manifest, features = extracted
    code = main(["evaluate", *ARCH, "--features", str(features), "--manifest", str(manifest),
                 "--layers", "first:1", "--k", "100", "--out", str(root / "r")])
    assert code == 1


def test_evaluate_deterministic(extracted):
    root, manifest, features = extracted
    for prefix in ("r1", "r2"):
        main(["evaluate", *ARCH, "--features", str(features), "--manifest", str(manifest),
              "--k", "4", "--out", str(root / prefix)])
    assert (root / "r1_summary.csv").read_bytes() == (root / "r2_summary.csv").read_bytes()
    assert (root / "r1_folds.csv").read_bytes() == (root / "r2_folds.csv").read_bytes()
