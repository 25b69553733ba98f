import csv
import io

import pytest

from subfgn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    return list(csv.DictReader(ln for ln in text.splitlines() if not ln.startswith("#")))


SMALL = ["--K", "20", "--trajectories", "6", "--h", "16", "--n-time", "32", "--seed", "42"]


def test_temporal_small(capsys):
    code, out, _ = run(capsys, "temporal", "--alpha", "0.5", "--hurst", "0.75", "--grids", "8,16,32,64", *SMALL)
    assert code == 0
    rows = body(out)
    assert len(rows) == 4
    assert sum(1 for r in rows if r["rate"]) == 3
    assert all(r["seed"] == "42" for r in rows)


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "t.csv"
    code, out, _ = run(capsys, "spatial", "--alpha", "0.3", "--hurst", "0.6", "--grids", "8,16", "--out", str(dest), *SMALL)
    assert code == 0 and out == ""
    assert len(body(dest.read_text())) == 2


def test_deterministic_spatial(capsys):
    code, out, _ = run(capsys, "deterministic", "--alpha", "0.5", "--grids-h", "16,32,64,128", "--n-time", "512")
    assert code == 0
    rows = body(out)
    assert abs(float(rows[0]["mean_rate"]) - 2.0) < 0.15


def test_sample_noise(capsys):
    outs = [run(capsys, "sample-noise", "--hurst", "0.75", "--n", "1024", "--seed", "7")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    rows = list(csv.reader(io.StringIO(outs[0])))
    assert rows[0] == ["step_index", "increment"]
    assert len(rows) == 1025
    assert rows[1][0] == "1" and rows[-1][0] == "1024"


def test_predict_rates(capsys):
    code, out, _ = run(capsys, "predict-rates", "--alpha", "0.3", "--hurst", "0.6", "--m", "0")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert float(row["temporal_rate"]) == pytest.approx(0.525)
    assert float(row["spatial_rate"]) == pytest.approx(1.5)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("# small run\nalpha = 0.5\nhurst = 0.75\ngrids = 8,16,32\nK = 20\ntrajectories = 6\nh = 16\nseed = 5\n")
    code, out, _ = run(capsys, "--config", str(cfg), "temporal")
    assert code == 0
    assert len(body(out)) == 3
    code, out2, _ = run(capsys, "--config", str(cfg), "temporal", "--seed", "6")
    assert code == 0
    assert body(out2)[0]["seed"] == "6"
    assert body(out2)[0]["error"] != body(out)[0]["error"]


@pytest.mark.parametrize(
    "argv",
    [
        ["temporal", "--alpha", "0.5", "--grids", "8,16"],
        ["temporal", "--alpha", "0.5", "--seed", "1", "--grids", "8,12,24"],
        ["temporal", "--alpha", "0.5", "--seed", "1", "--bogus"],
        ["sample-noise", "--hurst", "0.75", "--n", "16"],
        ["sample-noise", "--hurst", "1.5", "--n", "16", "--seed", "1"],
        ["nonsense"],
    ],
)
def test_errors_exit_nonzero(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code != 0
    assert err
