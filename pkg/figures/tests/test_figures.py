import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from figures import FigureSpec, render_distribution_compare, render_scaling_plot
from figures.cli import main


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def scaling_csv(path, exponent=0.5, coeff=1.0):
    rows = [(n, coeff * n ** exponent, coeff * n ** exponent * 0.9,
             coeff * n ** exponent * 1.1) for n in (16, 32, 64, 128, 256)]
    return write_csv(path, ["n", "value", "ci_low", "ci_high"], rows)


def test_scaling_annotated_slope_exact(tmp_path):
    src = scaling_csv(tmp_path / "in.csv")
    out = tmp_path / "fig.png"
    info = render_scaling_plot(FigureSpec((src,), "scaling", str(out)))
    assert abs(info["slope"] - 0.5) < 1e-12
    assert out.stat().st_size > 0


def test_scaling_with_reference_slope(tmp_path):
    src = scaling_csv(tmp_path / "in.csv", exponent=-1.5)
    out = tmp_path / "fig.png"
    rc = main(["scaling", "--in", src, "--out", str(out),
               "--ref-slope", "-1.5"])
    assert rc == 0 and out.exists()


def test_empty_csv_error_names_file(tmp_path):
    src = write_csv(tmp_path / "empty.csv", ["n", "value"], [])
    with pytest.raises(ValueError, match="empty.csv"):
        render_scaling_plot(FigureSpec((src,), "scaling", str(tmp_path / "f.png")))


def test_missing_file_and_columns(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        render_scaling_plot(FigureSpec(("nope.csv",), "scaling", "f.png"))
    src = write_csv(tmp_path / "bad.csv", ["n", "val"], [(1, 2)])
    with pytest.raises(ValueError, match="missing required columns"):
        render_scaling_plot(FigureSpec((src,), "scaling", str(tmp_path / "f.png")))


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError, match="kind"):
        FigureSpec(("x.csv",), "pie", "f.png")


def test_distribution_identical_columns_ks_zero(tmp_path):
    xs = np.linspace(-1, 1, 200)
    src = write_csv(tmp_path / "s.csv", ["a", "b"], list(zip(xs, xs)))
    info = render_distribution_compare(
        FigureSpec((src,), "distribution-compare", str(tmp_path / "f.png")))
    assert info["ks"] == 0.0


def test_distribution_disjoint_supports_ks_one(tmp_path):
    a = np.linspace(0, 1, 100)
    src = write_csv(tmp_path / "s.csv", ["a", "b"], list(zip(a, a + 5.0)))
    info = render_distribution_compare(
        FigureSpec((src,), "distribution-compare", str(tmp_path / "f.png")))
    assert info["ks"] == 1.0


def test_distribution_ks_carried_from_json(tmp_path):
    xs = np.linspace(-1, 1, 50)
    src = write_csv(tmp_path / "s.csv", ["a", "b"], list(zip(xs, xs)))
    doc = {"rows": [{"n": 1024, "value": 0.021}, {"n": 16384, "value": 0.0137}]}
    jpath = tmp_path / "result.json"
    jpath.write_text(json.dumps(doc))
    info = render_distribution_compare(
        FigureSpec((src,), "distribution-compare", str(tmp_path / "f.png"),
                   result_json=str(jpath)))
    assert info["ks"] == 0.0137


def test_rendering_is_deterministic(tmp_path):
    src = scaling_csv(tmp_path / "in.csv")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_scaling_plot(FigureSpec((src,), "scaling", str(a), ref_slope=0.5))
    render_scaling_plot(FigureSpec((src,), "scaling", str(b), ref_slope=0.5))
    assert a.read_bytes() == b.read_bytes()


def test_cli_exit_codes(tmp_path):
    assert main(["scaling", "--in", "nope.csv",
                 "--out", str(tmp_path / "f.png")]) == 2
    with pytest.raises(SystemExit):
        main(["scaling", "--out", "f.png"])  # --in is required


@pytest.mark.skipif(shutil.which("slowmix") is None,
                    reason="primary CLI not installed")
def test_criterion_14_slope_matches_result_json(tmp_path):
    """The annotated slope must reproduce the primary run's fitted value
    to 3 decimals, consuming only result.csv / result.json."""
    run = tmp_path / "run"
    proc = subprocess.run(
        ["slowmix", "tower-psi", "--seed", "7", "--beta", "2.5",
         "--trials", "20000", "--n-pow", "6:12", "--out", str(run)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    out = tmp_path / "fig.png"
    info = render_scaling_plot(
        FigureSpec((str(run / "result.csv"),), "scaling", str(out),
                   ref_slope=-1.5))
    recorded = json.loads((run / "result.json").read_text())["fits"]["slope"]
    assert abs(info["slope"] - recorded) < 5e-4
    print(f"[PASS] criterion 14 figures slope: {info['slope']:.3f} "
          f"matches recorded {recorded:.3f}")


def test_cli_roundtrip_output_message(tmp_path, capsys):
    src = scaling_csv(tmp_path / "in.csv", exponent=1.0)
    out = tmp_path / "fig.png"
    assert main(["correlation-decay", "--in", src, "--out", str(out)]) == 0
    msg = capsys.readouterr().out
    assert msg.startswith(f"wrote {out}") and "slope=" in msg
