import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from lbmgen.cli import (
    CONFIG_SCHEMA, ConfigError, build_method, build_rule, cmd_emit, cmd_flops, cmd_simulate,
    load_config, main, validate_config,
)
from lbmgen.kernel import Field, StreamingPattern, emit, lower
from lbmgen.lattice import builtin
from lbmgen.methods import assemble_collision_rule, create_srt, create_trt, method_tableau
from lbmgen.refsim import read_snapshot, run, taylor_green
from lbmgen.simplify import select_best
from lbmgen.symexpr import Symbol, count_flops

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

TRT = {"stencil": "D2Q9", "method": {"kind": "trt", "rates": {"even": "omega_e", "odd": "omega_o"}}}
SRT = {"stencil": "D2Q9", "method": {"kind": "srt", "rates": "omega"}}


def write(tmp_path, cfg, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def with_(base, **extra):
    cfg = yaml.safe_load(yaml.safe_dump(base))
    cfg.update(extra)
    return cfg


# -- derive

def test_derive_trt_tableau(capsys):
    assert main(["derive", str(CONFIGS / "trt_d2q9.yaml")]) == 0
    lines = capsys.readouterr().out.splitlines()
    rows = [[c.strip() for c in ln.split("|")] for ln in lines[2:] if ln]
    assert len(rows) == 9
    table = {r[0]: (r[1], r[2]) for r in rows}
    assert table["x**2*y**2"] == ("rho/9 + rho*u_0**2/3 + rho*u_1**2/3", "omega_e")
    assert table["x**2*y"] == ("rho*u_1/3", "omega_o")
    assert table["x*y"] == ("rho*u_0*u_1", "omega_e")


def test_derive_mrt_weighted(capsys):
    assert main(["derive", str(CONFIGS / "mrt_d2q9.yaml")]) == 0
    out = capsys.readouterr().out
    for poly in ("3*x**2 + 3*y**2 - 2", "9*x**2*y**2 - 3*x**2 - 3*y**2 + 1", "x**2 - y**2"):
        assert poly in out


def test_derive_matches_library():
    cfg = load_config(str(CONFIGS / "trt_d2q9.yaml"))
    m = create_trt(builtin("D2Q9"), Symbol("omega_e"), Symbol("omega_o"))
    assert method_tableau(build_method(cfg)) == method_tableau(m)


# -- configuration errors

@pytest.mark.parametrize("cfg", [
    {"stencil": "D2Q8", "method": {"kind": "srt", "rates": "omega"}},
    {"stencil": "D2Q9", "method": {"kind": "srt", "rates": "omega", "colour": "red"}},
    {"stencil": "D2Q9", "method": {"kind": "srt", "rates": "omega"}, "extra": 1},
    {"stencil": "D2Q9", "method": {"kind": "lbgk", "rates": "omega"}},
    {"stencil": "D2Q9"},
])
def test_config_errors_exit_2(tmp_path, capsys, cfg):
    assert main(["derive", write(tmp_path, cfg)]) == 2
    assert capsys.readouterr().err.startswith("config error:")


def test_schema_error_names_key_path():
    with pytest.raises(ConfigError, match=r"method\.colour"):
        validate_config({"stencil": "D2Q9", "method": {"kind": "srt", "rates": "omega",
                                                       "colour": "red"}})
    with pytest.raises(ConfigError, match=r"scenario\.steps"):
        validate_config(with_(SRT, scenario={"name": "couette", "steps": -1}))


def test_schema_is_published_and_strict():
    assert CONFIG_SCHEMA["additionalProperties"] is False
    assert set(CONFIG_SCHEMA["required"]) == {"stencil", "method"}


def test_missing_file_exits_nonzero(tmp_path):
    assert main(["derive", str(tmp_path / "nope.yaml")]) != 0


# -- flops

def test_flops_mrt_selects_only_cse(capsys):
    assert main(["flops", str(CONFIGS / "mrt_d2q9.yaml")]) == 0
    out = capsys.readouterr().out
    assert "selected: only-cse" in out
    err = float(out.strip().split()[-1])
    assert err < 1e-12


def test_flops_d3q19_srt_band():
    text = cmd_flops(load_config(str(CONFIGS / "srt_d3q19_flops.yaml")))
    summary = dict(ln.split() for ln in text.split("summary:\n")[1].split("selected")[0].splitlines())
    assert int(summary["only-cse"]) <= 320
    assert min(int(summary["custom-direction"]), int(summary["custom-default"])) <= 230


def test_collide_only_and_pull_flops_identical():
    a = cmd_flops(with_(TRT, streaming={"pattern": "collide-only"}))
    b = cmd_flops(with_(TRT, streaming={"pattern": "pull"}))
    assert a == b
    rule, _ = build_rule(TRT)
    src, dst = Field("src", 2, 9), Field("dst", 2, 9)
    k_pull = lower(rule, StreamingPattern.TWO_ARRAY_PULL, src, dst)
    k_co = lower(rule, StreamingPattern.COLLIDE_ONLY, src)
    assert count_flops(k_pull.body) == count_flops(k_co.body) == rule.flops()


def test_strategy_override(capsys):
    assert main(["flops", str(CONFIGS / "trt_d2q9.yaml"), "--strategy", "only-cse"]) == 0
    assert "selected: only-cse" in capsys.readouterr().out


# -- emit

def test_emit_aa_writes_two_kernels(tmp_path):
    cfg = with_(TRT, streaming={"pattern": "aa"})
    paths = cmd_emit(cfg, str(tmp_path))
    sources = sorted(Path(p).name for p in paths if p.endswith(".c"))
    assert sources == ["collide_aa_even.c", "collide_aa_odd.c"]


def test_emit_pull_writes_one_kernel_and_boundaries(tmp_path):
    assert len([p for p in cmd_emit(TRT, str(tmp_path)) if p.endswith(".c")]) == 1
    cfg = with_(TRT, boundaries={"mode": "index-list", "walls": [
        {"kind": "noslip", "face": "y-"}, {"kind": "ubb", "face": "y+", "velocity": [0.05, 0]}]})
    names = sorted(Path(p).name for p in cmd_emit(cfg, str(tmp_path / "b")) if p.endswith(".c"))
    assert names == ["collide_pull.c", "noslip_ylo_pull.c", "ubb_yhi_pull.c"]


def test_emit_is_deterministic(tmp_path):
    cfg = write(tmp_path, with_(TRT, streaming={"pattern": "eso"}))
    assert main(["emit", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["emit", cfg, "--out", str(tmp_path / "b")]) == 0
    a = sorted((tmp_path / "a").iterdir())
    b = sorted((tmp_path / "b").iterdir())
    assert [p.name for p in a] == [p.name for p in b] and len(a) == 4
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))


def test_emit_matches_library(tmp_path):
    cmd_emit(TRT, str(tmp_path))
    rule, _ = select_best(assemble_collision_rule(
        create_trt(builtin("D2Q9"), Symbol("omega_e"), Symbol("omega_o"))))
    k = lower(rule, StreamingPattern.TWO_ARRAY_PULL, Field("src", 2, 9), Field("dst", 2, 9))
    assert (tmp_path / "collide_pull.c").read_text() == emit(k).source


def test_collide_only_rejects_walls(tmp_path):
    cfg = with_(TRT, streaming={"pattern": "collide-only"},
                boundaries={"walls": [{"kind": "noslip", "face": "y-"}]})
    assert main(["emit", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_emit_rejects_missing_axis(tmp_path):
    cfg = with_(TRT, boundaries={"walls": [{"kind": "noslip", "face": "z-"}]})
    assert main(["emit", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


# -- simulate

def tg_config(steps, **sc):
    return with_(SRT, scenario={"name": "taylor-green-2d", "shape": [8, 8], "steps": steps,
                                "params": {"omega": 1.2}, "sample_every": 10, **sc})


def test_zero_step_run_reports_initial_observables(tmp_path):
    line, series = cmd_simulate(tg_config(0), str(tmp_path))
    assert [r[0] for r in series.rows] == [0]
    lines = (tmp_path / "observables.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("0,")
    assert "steps 0" in line


def test_simulate_matches_library(tmp_path):
    _, series = cmd_simulate(tg_config(30), str(tmp_path))
    rule, _ = select_best(assemble_collision_rule(create_srt(builtin("D2Q9"), Symbol("omega"))))
    direct = run(taylor_green(rule, {"omega": 1.2}, 8, 0.01, 30, sample_every=10))
    assert series.rows == direct.rows
    u, name, step = read_snapshot(tmp_path / "velocity_final.bin")
    assert np.array_equal(u, direct.final_velocity) and step == 30


def test_simulate_taylor_green_summary(tmp_path, capsys):
    cfg = write(tmp_path, tg_config(200))
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("taylor-green: fitted nu =") and "relative error" in out


def test_simulate_divergence_exits_1(tmp_path, capsys):
    cfg = tg_config(3000, amplitude=0.05)
    cfg["scenario"]["params"]["omega"] = 10.0
    assert main(["simulate", write(tmp_path, cfg), "--out", str(tmp_path)]) == 1
    assert "runtime failure" in capsys.readouterr().err


def test_simulate_missing_params_exit_2(tmp_path):
    cfg = tg_config(10)
    cfg["scenario"]["params"] = {}
    assert main(["simulate", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert main(["simulate", write(tmp_path, SRT, "plain.yaml"), "--out", str(tmp_path)]) == 2


def test_simulate_uncovered_face_exit_2(tmp_path):
    cfg = with_(SRT, boundaries={"walls": [{"kind": "noslip", "face": "y-"}]},
                scenario={"name": "couette", "shape": [8, 8], "steps": 5, "params": {"omega": 1}})
    assert main(["simulate", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "lbmgen.cli", "derive",
                          str(CONFIGS / "trt_d2q9.yaml")], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("Moment")


def test_emit_is_independent_of_hash_seed(tmp_path):
    cfg = write(tmp_path, with_(TRT, streaming={"pattern": "aa"}))
    outputs = []
    for seed in ("0", "1", "2"):
        out = tmp_path / seed
        env = dict(os.environ, PYTHONHASHSEED=seed)
        subprocess.run([sys.executable, "-m", "lbmgen.cli", "emit", cfg, "--out", str(out)],
                       check=True, capture_output=True, env=env)
        outputs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outputs[0] == outputs[1] == outputs[2]
