"""End-to-end check of the plot scripts against real harness outputs.

Exercises the frontend package (frontend/, TypeScript) through its CLI:
compare-mode CSVs in, SVG figures out, byte-identical on a rerun.  Skips
when node or the built frontend is unavailable; `npm install && npm run
build` inside frontend/ produces it.
"""

import shutil
import subprocess
from pathlib import Path

import pytest

from marlp.config import parse_config
from marlp.harness import compare_mode

ROOT = Path(__file__).resolve().parent.parent
DIST = ROOT / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not (DIST / "learning_curves.js").exists(),
    reason="node or built frontend missing (run npm install && npm run build)")


@pytest.fixture(scope="module")
def compare_outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("compare")
    cfg = parse_config(f"""
seed: 1
environment:
  kind: grid
  side: 2
  agents: 2
network: {{model: ring}}
algorithm: {{name: rmapd, t_mix: 2, tau: 10000, T: 5000, M: 0.5,
             beta: 0.0003, alpha: 0.001}}
output: {{dir: {out}, stride: 200}}
""")
    compare_mode(cfg)
    return out


def _render(script, args):
    return subprocess.run(
        ["node", str(DIST / script), *args],
        capture_output=True, text=True)


def test_a12_learning_curves_figure(compare_outputs):
    out = compare_outputs
    fig = out / "learning.svg"
    args = ["--csv",
            f"{out}/trace_rmapd.csv,{out}/trace_cspd.csv,{out}/trace_iavi.csv",
            "--labels", "RMAPD,C-SPD,I-AVI",
            "--summary", str(out / "summary.json"),
            "--out", str(fig), "--window", "3"]
    first = _render("learning_curves.js", args)
    assert first.returncode == 0, first.stderr
    blob = fig.read_bytes()
    assert b"<svg" in blob
    assert blob.count(b"<polyline") == 3
    assert b"stroke-dasharray" in blob  # the exact-optimum reference line
    second = _render("learning_curves.js", args)
    assert second.returncode == 0
    assert fig.read_bytes() == blob
    print("\n[A12a] PASS  three-curve learning figure with reference line, "
          "byte-identical rerun")


def test_a12_consensus_figure(compare_outputs):
    out = compare_outputs
    fig = out / "consensus.svg"
    args = ["--csv", f"{out}/trace_rmapd.csv", "--labels", "RMAPD",
            "--out", str(fig), "--window", "1"]
    first = _render("consensus.js", args)
    assert first.returncode == 0, first.stderr
    blob = fig.read_bytes()
    assert blob.count(b"<polyline") == 2  # one curve in each panel
    assert b"occupancy consensus error" in blob
    assert b"value consensus error" in blob
    second = _render("consensus.js", args)
    assert second.returncode == 0
    assert fig.read_bytes() == blob
    print("\n[A12b] PASS  two-panel consensus figure, byte-identical rerun")


def test_a12_schema_error_reported(compare_outputs, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("iter,nope\n1,2\n")
    result = _render("learning_curves.js",
                     ["--csv", str(bad), "--out", str(tmp_path / "x.svg")])
    assert result.returncode == 1
    assert "avg_reward_scaled" in result.stderr
    assert not (tmp_path / "x.svg").exists()
