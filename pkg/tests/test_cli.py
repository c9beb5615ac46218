import json

import numpy as np
import pytest
from click.testing import CliRunner

from propshape.cli import main
from propshape.fixtures import cube, icosphere
from propshape.meshio import save_mesh
from propshape.prompts import PromptSpec, TemplateKind, save_prompt_set


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def mesh_file(tmp_path):
    path = tmp_path / "cube.obj"
    save_mesh(cube(), path)
    return path


def test_render_depth_writes_png(runner, mesh_file, tmp_path):
    out = tmp_path / "depth.png"
    result = runner.invoke(main, [
        "render-depth", "--mesh", str(mesh_file), "--out", str(out),
        "--width", "64", "--height", "64"])
    assert result.exit_code == 0, result.output
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_render_depth_raw_dump(runner, mesh_file, tmp_path):
    out = tmp_path / "depth.raw"
    result = runner.invoke(main, [
        "render-depth", "--mesh", str(mesh_file), "--out", str(out),
        "--width", "32", "--height", "16"])
    assert result.exit_code == 0, result.output
    data = out.read_bytes()
    assert len(data) == 8 + 32 * 16 * 4


def test_eval_pair_writes_report(runner, tmp_path):
    a = tmp_path / "a.obj"
    b = tmp_path / "b.glb"
    save_mesh(cube(), a)
    save_mesh(icosphere(0.6, 2), b)
    out = tmp_path / "pair.json"
    result = runner.invoke(main, [
        "eval-pair", "--original", str(a), "--generated", str(b),
        "--samples", "800", "--restarts", "4", "--seed", "1",
        "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(out.read_text())
    assert payload["chamfer"] > 0
    assert payload["hausdorff"] >= payload["alignment"]["rms"] >= 0
    assert "convention" in payload


def test_kappa_command(runner, tmp_path):
    path = tmp_path / "ratings.csv"
    rows = ["item_id,rater_id,q1,q2,q3,condition"]
    rng = np.random.default_rng(0)
    for i in range(20):
        cond = "custom" if i % 2 else "general"
        base = rng.integers(0, 2, 3)
        for rater in ("r1", "r2", "r3"):
            vals = base.copy()
            if rng.random() < 0.2:
                vals[rng.integers(0, 3)] ^= 1
            rows.append(f"i{i},{rater},{vals[0]},{vals[1]},{vals[2]},{cond}")
    path.write_text("\n".join(rows) + "\n")
    result = runner.invoke(main, ["kappa", "--ratings", str(path)])
    assert result.exit_code == 0, result.output
    assert "q1: kappa=" in result.output
    assert "aligned" in result.output
    assert "success" in result.output


def test_wilcoxon_command(runner, tmp_path):
    path = tmp_path / "pairs.csv"
    rng = np.random.default_rng(2)
    b = rng.normal(size=12)
    a = b + np.abs(rng.normal(size=12))
    lines = ["a,b"] + [f"{x},{y}" for x, y in zip(a, b)]
    path.write_text("\n".join(lines) + "\n")
    result = runner.invoke(main, ["wilcoxon", "--pairs", str(path)])
    assert result.exit_code == 0, result.output
    assert "z=" in result.output and "p=" in result.output


def test_pipeline_run_mock(runner, mesh_file, tmp_path):
    depth_png = tmp_path / "depth.png"
    r = runner.invoke(main, ["render-depth", "--mesh", str(mesh_file),
                             "--out", str(depth_png),
                             "--width", "48", "--height", "48"])
    assert r.exit_code == 0
    result = runner.invoke(main, [
        "pipeline", "run", "--rgb", str(depth_png), "--depth", str(depth_png),
        "--prompt", "A pink sheep", "--out-dir", str(tmp_path / "job"),
        "--seed", "3"])
    assert result.exit_code == 0, result.output
    assert "anchored" in result.output


def test_run_study_command(runner, tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    save_mesh(cube(), data / "cube.obj")
    prompts = tmp_path / "prompts.csv"
    save_prompt_set([PromptSpec(text="toy robot", kind=TemplateKind.NOUN,
                                condition="general", object_id="*")], prompts)
    manifest = tmp_path / "study.toml"
    manifest.write_text(f"""
seed = 5
samples_per_mesh = 1000
dataset_dir = "{data}"
prompts = "{prompts}"

[render]
width = 64
height = 64

[icp]
restarts = 4
""")
    out_dir = tmp_path / "out"
    result = runner.invoke(main, ["run-study", "--manifest", str(manifest),
                                  "--out-dir", str(out_dir),
                                  "--backend", "mock"])
    assert result.exit_code == 0, result.output
    report = json.loads((out_dir / "report.json").read_text())
    assert report["aggregates"]["completed"] == 1
    assert (out_dir / "report.csv").exists()


def test_live_pipeline_requires_endpoints(runner, mesh_file, tmp_path):
    depth_png = tmp_path / "depth.png"
    runner.invoke(main, ["render-depth", "--mesh", str(mesh_file),
                         "--out", str(depth_png)])
    result = runner.invoke(main, [
        "pipeline", "run", "--rgb", str(depth_png), "--depth", str(depth_png),
        "--prompt", "x", "--backend", "live", "--out-dir", str(tmp_path)])
    assert result.exit_code != 0
    assert "endpoint" in result.output
