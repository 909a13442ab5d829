import json
import re

import numpy as np
import pytest

from mlstab.cli import main
from mlstab.fileio import ConfigError, parse_config, read_trajectory, trajectory_to_csv
from mlstab.solver import SolverConfig, solve
from mlstab.svg import plot_svg
from mlstab.system import builtin_example


@pytest.fixture(scope="module")
def example1_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("ex1")
    code = main(["example", "example1", "--out", str(out)])
    return code, out / "example1"


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


LINEAR = {
    "schema": 1,
    "orders": [0.5, 0.8],
    "f": {"name": "linear", "params": {"matrix": [[-2, 1], [1, -3]]}},
    "delays": [{"field": {"name": "linear", "params": {"matrix": [[0, 0.5], [0.5, 0]]}},
                "kind": "constant", "params": {"tau": 0.5}}],
    "phi": {"kind": "constant", "value": [0.1, 0.2]},
    "T": 2.0,
    "step": 0.01,
}


# example ----------------------------------------------------------------------


def test_example1_artifacts(example1_out):
    code, root = example1_out
    assert code == 0
    assert sorted(p.name for p in (root / "phi1").iterdir()) == [
        "certificate.json", "plot.svg", "report.json", "traj.csv"]
    assert sorted(p.name for p in (root / "phi2").iterdir()) == ["plot.svg", "report.json", "traj.csv"]
    small = json.loads((root / "phi1" / "report.json").read_text())
    assert small["expected_verdicts_hold"] and small["convergent"]
    large = json.loads((root / "phi2" / "report.json").read_text())
    assert large["diverged"] and not large["convergent"] and not large["in_scope"]


def test_example1_csv_layout(example1_out):
    _, root = example1_out
    lines = (root / "phi1" / "traj.csv").read_text().splitlines()
    assert lines[0] == "t,w_1,w_2"
    times = np.array([float(l.split(",")[0]) for l in lines[1:]])
    assert np.sum(times >= 0) == 20001 and np.sum(times < 0) == 1000


def test_example1_svg_curves(example1_out):
    _, root = example1_out
    small = (root / "phi1" / "plot.svg").read_text()
    assert small.count('class="solution"') == 2 and small.count('class="envelope"') == 2
    large = (root / "phi2" / "plot.svg").read_text()
    assert large.count('class="solution"') == 2 and 'class="envelope"' not in large


def test_example2_runs_clean(tmp_path):
    assert main(["example", "example2", "--out", str(tmp_path)]) == 0
    for k in (1, 2):
        rep = json.loads((tmp_path / "example2" / f"phi{k}" / "report.json").read_text())
        assert rep["convergent"] and rep["in_scope"] and rep["scope"] == "global"


def test_unknown_example(tmp_path):
    assert main(["example", "example9", "--out", str(tmp_path)]) == 64


def test_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 64


# verify -----------------------------------------------------------------------


def test_verify_round_trip(example1_out, tmp_path):
    _, root = example1_out
    code = main(["verify", "--traj", str(root / "phi1" / "traj.csv"),
                 "--cert", str(root / "phi1" / "certificate.json"), "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["pass"] and {c["check"] for c in rep["checks"]} >= {"positivity", "norm_bound", "envelope"}
    for c in rep["checks"]:
        assert set(c) >= {"check", "pass", "worst_violation", "at_t"}


def test_verify_tampered(example1_out, tmp_path):
    _, root = example1_out
    lines = (root / "phi1" / "traj.csv").read_text().splitlines()
    row = lines[3000].split(",")
    row[2] = "-0.25"
    lines[3000] = ",".join(row)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    code = main(["verify", "--traj", str(bad), "--cert", str(root / "phi1" / "certificate.json"),
                 "--out", str(tmp_path)])
    assert code == 2
    rep = json.loads((tmp_path / "report.json").read_text())
    pos = [c for c in rep["checks"] if c["check"] == "positivity"][0]
    assert not pos["pass"] and pos["component"] == 1


def test_verify_dimension_mismatch(example1_out, tmp_path):
    _, root = example1_out
    cert = json.loads((root / "phi1" / "certificate.json").read_text())
    cert["v"].append(0.1)
    cert["sup_I"].append(1.0)
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(cert))
    assert main(["verify", "--traj", str(root / "phi1" / "traj.csv"), "--cert", str(path)]) == 65


def test_verify_unparsable(tmp_path):
    bad = tmp_path / "x.csv"
    bad.write_text("t,w_1\n0,abc\n")
    cert = tmp_path / "c.json"
    cert.write_text("{}")
    assert main(["verify", "--traj", str(bad), "--cert", str(cert)]) == 65


# simulate ---------------------------------------------------------------------


def test_simulate_example_grid(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example1", "T": 20.0, "step": 1e-3})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path), "--plot"]) == 0
    lines = (tmp_path / "traj.csv").read_text().splitlines()
    post = [l for l in lines[1:] if float(l.split(",")[0]) >= 0]
    assert len(post) == 20001
    assert (tmp_path / "plot.svg").exists()


def test_simulate_rejects_zero_horizon(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example1", "T": 0})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 65


def test_simulate_rejects_bad_order(tmp_path, capsys):
    doc = dict(LINEAR, orders=[1.2, 0.5])
    cfg = write_config(tmp_path / "c.json", doc)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 65
    assert "order" in capsys.readouterr().err


def test_simulate_divergence(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example1", "phi_index": 1, "T": 8.0})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert (tmp_path / "traj.csv").exists()


def test_simulate_custom_system(tmp_path):
    cfg = write_config(tmp_path / "c.json", LINEAR)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0


# certify ----------------------------------------------------------------------


def test_certify_example1(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example1"})
    assert main(["certify", "--config", cfg, "--out", str(tmp_path), "--phi-norm", "0.75"]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["scope"] == "local" and cert["beta"] == pytest.approx(0.61)
    assert json.loads((tmp_path / "checks.json").read_text())["result"] == "certificate issued"


def test_certify_example1_out_of_scope(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example1"})
    assert main(["certify", "--config", cfg, "--out", str(tmp_path), "--phi-norm", "1.5"]) == 3
    assert not (tmp_path / "certificate.json").exists()


def test_certify_example2(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"example": "example2"})
    assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["scope"] == "global" and cert["beta"] == pytest.approx(0.35)


def test_certify_failed_assumptions(tmp_path):
    doc = dict(LINEAR, f={"name": "linear", "params": {"matrix": [[-2, -1], [1, -3]]}})
    cfg = write_config(tmp_path / "c.json", doc)
    assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 3
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert "H1:cooperative" in checks["result"]


def test_certify_no_vector(tmp_path):
    doc = dict(LINEAR, f={"name": "identity", "params": {"dim": 2}})
    doc.pop("delays")
    cfg = write_config(tmp_path / "c.json", doc)
    assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 4


def test_certify_seed_from_environment(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "c.json", {"example": "example2", "seed": 1})
    outs = []
    for seed in ("5", "5", "6"):
        monkeypatch.setenv("MLSTAB_SEED", seed)
        d = tmp_path / f"run{len(outs)}"
        assert main(["certify", "--config", cfg, "--out", str(d)]) == 0
        outs.append((d / "checks.json").read_text())
    assert outs[0] == outs[1] and outs[0] != outs[2]


# files ------------------------------------------------------------------------


def test_csv_round_trip_is_exact(tmp_path):
    ex = builtin_example("example1")
    traj = solve(ex.system, ex.phis[0], SolverConfig(h=0.01, T=2.0))
    text = trajectory_to_csv(traj)
    path = tmp_path / "t.csv"
    path.write_text(text)
    back = read_trajectory(path)
    assert np.array_equal(back.states, traj.states) and np.array_equal(back.t, traj.t)
    assert trajectory_to_csv(back) == text


def test_csv_without_history(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("t,w_1\n0,1\n0.5,0.5\n1,0.25\n")
    traj = read_trajectory(path)
    assert traj.r == 0.0 and traj.h == 0.5


@pytest.mark.parametrize("text", ["x,w_1\n0,1\n1,1\n", "t,w_1\n0,1\n", "t,w_1\n1,1\n0,1\n",
                                  "t,w_1\n-1,-1\n0,1\n1,1\n", "t,w_1\n0.5,1\n1,1\n"])
def test_csv_rejects_malformed(tmp_path, text):
    path = tmp_path / "t.csv"
    path.write_text(text)
    with pytest.raises(ConfigError):
        read_trajectory(path)


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config({"schema": 2, "example": "example1"})
    with pytest.raises(ConfigError):
        parse_config({"example": "example1", "orders": [0.5, 0.5]})
    with pytest.raises(ConfigError):
        parse_config({"orders": [0.5]})
    with pytest.raises(ConfigError):
        parse_config(dict(LINEAR, phi={"kind": "spline"}))
    with pytest.raises(ConfigError):
        parse_config(dict(LINEAR, phi={"kind": "constant", "value": [1, 2, 3]}))
    with pytest.raises(ConfigError):
        parse_config({"example": "nope"})
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_config_sampled_history():
    doc = dict(LINEAR, phi={"kind": "samples", "r": 0.5, "values": [[0.1, 0.1], [0.2, 0.1], [0.3, 0.3]]})
    run = parse_config(doc)
    np.testing.assert_allclose(run.phi(-0.125), [0.25, 0.2])


def test_plot_svg_counts():
    t = np.linspace(0, 1, 5000)
    W = np.column_stack([np.exp(-t), np.exp(-2 * t), np.exp(-3 * t)])
    svg = plot_svg(t, W, W * 1.1, title="a < b")
    assert svg.count("<polyline") == 6 and "a &lt; b" in svg
    points = re.findall(r'points="([^"]*)"', svg)[0].split()
    assert len(points) <= 1500
    with pytest.raises(ValueError):
        plot_svg(t, W, W[:, :2])
