import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from instances import rng_for, vb_problem
from statbundle.cli import GRADCHECK_NAMES, main


def write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def summary(out: str) -> dict[str, float]:
    fields = out.strip().splitlines()[-1].replace("final ", "final_").split()
    return {k: float(v) for k, v in (f.split("=") for f in fields)}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def klflow_config(out, **problem):
    return {
        "seed": 3,
        "problem": {"type": "klflow", "n": 4, **problem},
        "integrator": {"scheme": "rk4", "dt": 0.01, "steps": 100},
        "output": out,
    }


def test_flow_from_target_is_a_single_row(tmp_path, capsys):
    w = [0.1, 0.2, 0.3, 0.4]
    out = str(tmp_path / "t.csv")
    cfg = write(tmp_path, "t.json", klflow_config(out, target=w, q0=w))
    assert main(["flow", "--config", cfg]) == 0
    rows = read_rows(out)
    assert rows[0] == ["step", "t", "objective", "grad_norm", "state_0", "state_1", "state_2", "state_3"]
    assert len(rows) == 2
    assert float(rows[1][2]) == 0.0
    assert summary(capsys.readouterr().out)["final_objective"] == 0.0


@pytest.mark.parametrize("direction", ["fwd", "rev"])
def test_flow_descends(tmp_path, capsys, direction):
    out = str(tmp_path / "f.csv")
    cfg = write(tmp_path, "f.json", klflow_config(out, direction=direction))
    assert main(["flow", "--config", cfg]) == 0
    rows = read_rows(out)[1:]
    assert len(rows) == 101
    obj = [float(r[2]) for r in rows]
    assert all(b <= a for a, b in zip(obj, obj[1:]))
    for r in rows:
        assert abs(sum(float(x) for x in r[4:]) - 1.0) <= 1e-12


def test_out_overrides_config_output(tmp_path, capsys):
    cfg = write(tmp_path, "f.json", klflow_config(str(tmp_path / "f.csv")))
    alt = tmp_path / "alt.csv"
    assert main(["flow", "--config", cfg, "--out", str(alt)]) == 0
    assert alt.exists()
    assert not (tmp_path / "f.csv").exists()


def test_floats_roundtrip_exactly(tmp_path, capsys):
    out = str(tmp_path / "f.csv")
    cfg = write(tmp_path, "f.json", klflow_config(out, target=[0.1, 0.2, 0.3, 0.4], q0=[0.4, 0.3, 0.2, 0.1]))
    main(["flow", "--config", cfg])
    for row in read_rows(out)[1:]:
        for cell in row[1:]:
            assert format(float(cell), ".17g") == cell


def test_gradcheck_kl_total(tmp_path, capsys):
    cfg = {
        "seed": 11,
        "problem": {"type": "gradcheck", "which": "kl_total", "n": 5, "trials": 20},
        "integrator": {"scheme": "exp-euler", "dt": 0.1, "steps": 1},
        "output": str(tmp_path / "g.csv"),
    }
    assert main(["gradcheck", "--config", write(tmp_path, "g.json", cfg)]) == 0
    assert summary(capsys.readouterr().out)["max_rel_error"] <= 1e-5
    assert len(read_rows(tmp_path / "g.csv")) == 21


@pytest.mark.parametrize("which", GRADCHECK_NAMES)
def test_gradcheck_every_gradient(tmp_path, capsys, which):
    cfg = {
        "seed": 5,
        "problem": {"type": "gradcheck", "which": which, "n": 4, "n1": 3, "n2": 3, "trials": 5},
        "integrator": {"scheme": "exp-euler", "dt": 0.1, "steps": 1},
        "output": str(tmp_path / "g.csv"),
    }
    assert main(["gradcheck", "--config", write(tmp_path, "g.json", cfg)]) == 0
    assert summary(capsys.readouterr().out)["max_rel_error"] <= 1e-5


def test_schrodinger_reports_distance_to_oracle(tmp_path, capsys):
    cfg = {
        "seed": 8,
        "problem": {"type": "schrodinger", "n1": 3, "n2": 3, "epsilon": 1.0},
        "integrator": {"scheme": "exp-euler", "dt": 0.1, "steps": 500},
        "output": str(tmp_path / "s.csv"),
    }
    assert main(["schrodinger", "--config", write(tmp_path, "s.json", cfg)]) == 0
    assert summary(capsys.readouterr().out)["tv_to_sinkhorn"] <= 1e-6


def test_schrodinger_with_explicit_inputs(tmp_path, capsys):
    cfg = {
        "seed": 8,
        "problem": {
            "type": "schrodinger",
            "n1": 2,
            "n2": 3,
            "epsilon": 0.5,
            "cost": [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0]],
            "margins": [[0.4, 0.6], [0.2, 0.3, 0.5]],
        },
        "integrator": {"scheme": "exp-euler", "dt": 0.1, "steps": 800},
        "output": str(tmp_path / "s.csv"),
    }
    assert main(["schrodinger", "--config", write(tmp_path, "s.json", cfg)]) == 0
    assert summary(capsys.readouterr().out)["tv_to_sinkhorn"] <= 1e-6


def test_vb_reports_parameter_error(tmp_path, capsys):
    p = vb_problem(rng_for(4), 3, 5)
    cfg = {
        "seed": 1,
        "problem": {
            "type": "vb",
            "n1": 3,
            "n2": 5,
            "joint": p.joint.table.tolist(),
            "x": p.x,
            "suffstat_dim": 4,
        },
        "integrator": {"scheme": "rk4", "dt": 0.01, "steps": 3000},
        "output": str(tmp_path / "v.csv"),
    }
    assert main(["vb", "--config", write(tmp_path, "v.json", cfg)]) == 0
    assert summary(capsys.readouterr().out)["theta_error"] <= 1e-6
    assert read_rows(tmp_path / "v.csv")[0][4:] == ["state_0", "state_1", "state_2", "state_3"]


def test_missing_integrator_is_named(tmp_path, capsys):
    cfg = klflow_config(str(tmp_path / "x.csv"))
    del cfg["integrator"]
    assert main(["flow", "--config", write(tmp_path, "bad.json", cfg)]) == 1
    assert "integrator" in capsys.readouterr().err


@pytest.mark.parametrize(
    "edit, key",
    [
        (lambda c: c["problem"].pop("type"), "type"),
        (lambda c: c["integrator"].update(dt=0.0), "dt"),
        (lambda c: c["integrator"].update(steps=0), "steps"),
        (lambda c: c["integrator"].update(scheme="leapfrog"), "scheme"),
        (lambda c: c["problem"].update(n=1), "n"),
        (lambda c: c["problem"].update(target=[0.5, 0.5, 0.5, -0.5]), "target"),
        (lambda c: c["problem"].update(target=[0.5, 0.6, 0.1, 0.1]), "target"),
        (lambda c: c.pop("seed"), "seed"),
    ],
)
def test_malformed_configs_exit_1(tmp_path, capsys, edit, key):
    cfg = klflow_config(str(tmp_path / "x.csv"))
    edit(cfg)
    assert main(["flow", "--config", write(tmp_path, "bad.json", cfg)]) == 1
    assert key in capsys.readouterr().err


def test_unreadable_or_invalid_json_exit_1(tmp_path, capsys):
    assert main(["flow", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["flow", "--config", str(bad)]) == 1


def test_unknown_subcommand_exit_1(capsys):
    assert main(["simulate", "--config", "x.json"]) == 1
    assert main([]) == 1


def test_subcommand_must_match_problem(tmp_path, capsys):
    cfg = write(tmp_path, "f.json", klflow_config(str(tmp_path / "f.csv")))
    assert main(["vb", "--config", cfg]) == 1
    assert "klflow" in capsys.readouterr().err


def test_positivity_breach_exit_2(tmp_path, capsys):
    cfg = klflow_config(str(tmp_path / "x.csv"), target=[1 - 3e-9, 1e-9, 1e-9, 1e-9], q0=[0.25] * 4)
    cfg["integrator"] = {"scheme": "exp-euler", "dt": 10.0, "steps": 5}
    assert main(["flow", "--config", write(tmp_path, "x.json", cfg)]) == 2
    assert "numerical" in capsys.readouterr().err


def run_twice(tmp_path, cmd, cfg):
    path = write(tmp_path, f"{cmd}.json", cfg)
    outs = []
    for k in range(2):
        out = tmp_path / f"{cmd}_{k}.csv"
        assert main([cmd, "--config", path, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    return outs


def test_repeated_runs_are_byte_identical(tmp_path, capsys):
    integ = {"scheme": "exp-euler", "dt": 0.05, "steps": 40}
    configs = {
        "flow": {"type": "klflow", "n": 5, "direction": "rev"},
        "meanfield": {"type": "meanfield", "n1": 3, "n2": 3},
        "schrodinger": {"type": "schrodinger", "n1": 3, "n2": 3, "epsilon": 0.5},
        "vb": {"type": "vb", "n1": 3, "n2": 4, "x": 0, "suffstat_dim": 2},
        "gradcheck": {"type": "gradcheck", "which": "js", "n": 4, "trials": 4},
    }
    for cmd, problem in configs.items():
        scheme = "rk4" if cmd == "vb" else "exp-euler"
        cfg = {"seed": 17, "problem": problem, "integrator": {**integ, "scheme": scheme}, "output": "unused.csv"}
        a, b = run_twice(tmp_path, cmd, cfg)
        assert a == b


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "f.json", klflow_config(str(tmp_path / "f.csv")))
    proc = subprocess.run([sys.executable, "-m", "statbundle", "flow", "--config", cfg], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("final objective=")
    assert np.isfinite(summary(proc.stdout)["final_grad_norm"])
