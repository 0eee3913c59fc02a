import csv
import json

import pytest

from icebox import __version__
from icebox.cli import (
    EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, ConfigError, ExperimentConfig,
    censored_summary, cmd_enumerate, cmd_sweep, cmd_verify, main, resolve_config,
)
from icebox.chains import CAP_EXCEEDED
from icebox.topology import PartitionClass


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_text() if out.exists() else None


def rerun_same(tmp_path, *argv):
    # the output path is part of the echoed config, so reruns reuse it
    return run(tmp_path, "out", *argv), run(tmp_path, "out", *argv)


def rows_of(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


def test_config_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 3, "c": 4, "seed": 9}))
    cfg = resolve_config(json.loads(path.read_text()), {"n": 2, "seed": None})
    assert (cfg.n, cfg.c, cfg.seed) == (2, 4.0, 9)


@pytest.mark.parametrize("bad", [{"n": 0}, {"a": -1}, {"cap": 1.5}, {"chain": "worm"},
                                 {"bc": "mobius"}, {"replicas": True}, {"c_values": []}])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        resolve_config(bad)


def test_unknown_key_exit(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 2, "temperature": 1}))
    assert main(["geom", "--config", str(path)]) == EXIT_CONFIG
    path.write_text("{not json")
    assert main(["geom", "--config", str(path)]) == EXIT_CONFIG
    assert main(["geom", "--format", "csv"]) == EXIT_CONFIG


def test_bad_flag_exit():
    with pytest.raises(SystemExit) as err:
        main(["escape", "--chain", "worm"])
    assert err.value.code == EXIT_CONFIG


def test_budget_exit():
    assert main(["enumerate", "--n", "6"]) == EXIT_BUDGET


def test_enumerate_small(tmp_path):
    code, text = run(tmp_path, "e.json", "enumerate", "--n", "1", "--a", "1", "--b", "1", "--c", "1")
    assert code == EXIT_OK
    doc = json.loads(text)
    assert doc["meta"]["version"] == __version__ and doc["meta"]["seed"] == 0
    rep = doc["report"]
    assert rep["omega"] == 6 and rep["omega_prime"] == 24 and rep["uniform"]
    assert rep["Z"] == pytest.approx(6)


def test_enumerate_masses():
    rep, _ = cmd_enumerate(resolve_config({"n": 2, "c": 3}))
    assert abs(rep["mass_total"] - 1) < 1e-12
    assert set(rep["classes"]) == {c.value for c in PartitionClass}


def test_enumerate_torus():
    rep, _ = cmd_enumerate(resolve_config({"n": 2, "bc": "periodic", "near_perfect": False}))
    assert rep["omega"] == 18 and rep["omega_prime"] is None
    assert sum(v["count"] for v in rep["classes"].values()) == 18


def test_enumerate_rerun_identical(tmp_path):
    args = ("enumerate", "--n", "3", "--no-near-perfect")
    a, b = rerun_same(tmp_path, *args)
    assert a == b


def test_escape_csv(tmp_path):
    code, text = run(tmp_path, "esc.csv", "escape", "--n", "2", "--a", "1", "--b", "1", "--c", "1",
                     "--cap", "100000", "--replicas", "5", "--seed", "3", "--stride", "1")
    assert code == EXIT_OK
    assert text.startswith(f"# icebox {__version__} escape\n# config ")
    rows = rows_of(text)
    assert rows[0] == ["replica", "seed", "steps_or_cap", "hit"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2", "3", "4"]
    summary = json.loads(text.splitlines()[-1].split("summary ", 1)[1])
    assert summary["hit_fraction"] == 1.0


def test_escape_capped(tmp_path):
    code, text = run(tmp_path, "esc.json", "escape", "--n", "6", "--cap", "200", "--replicas", "3",
                     "--format", "json")
    doc = json.loads(text)
    assert doc["summary"]["hits"] == 0 and doc["summary"]["median_censored"]
    assert all(r["steps_or_cap"] == 200 and not r["hit"] for r in doc["replicas"])


def test_escape_loop_torus(tmp_path):
    code, _ = run(tmp_path, "t.csv", "escape", "--n", "2", "--bc", "periodic", "--chain", "loop",
                  "--cap", "20000", "--replicas", "2")
    assert code == EXIT_OK
    assert main(["escape", "--n", "2", "--bc", "periodic"]) == EXIT_CONFIG


def test_censored_summary():
    s = censored_summary([10, CAP_EXCEEDED, CAP_EXCEEDED], cap=100)
    assert s == {"replicas": 3, "hits": 1, "hit_fraction": 1 / 3, "median": 100.0,
                 "median_censored": True, "capped": 2}


def test_sweep_phi_decreasing(tmp_path):
    rows, text = cmd_sweep(resolve_config({"n": 2, "c_values": [1, 2, 3, 4], "replicas": 2, "cap": 1000}))
    assert len(rows) == 4
    phi = [r["phi_CG"] for r in rows]
    bound = [r["mixing_lower_bound"] for r in rows]
    assert all(b < a for a, b in zip(phi, phi[1:]))
    assert all(b > a for a, b in zip(bound, bound[1:]))
    args = ("sweep", "--n", "2", "--c-values", "1,3", "--replicas", "2", "--cap", "1000")
    a, b = rerun_same(tmp_path, *args)
    assert a == b and len(rows_of(a[1])) == 3


def test_sweep_without_exact_columns():
    rows, _ = cmd_sweep(resolve_config({"n": 5, "c_values": [3], "replicas": 2, "cap": 100}))
    assert "phi_CG" not in rows[0]


def test_verify_passes(tmp_path):
    code, text = run(tmp_path, "v.json", "verify", "--n", "2")
    assert code == EXIT_OK
    doc = json.loads(text)
    assert doc["passed"]
    names = {e["name"] for e in doc["checks"]}
    assert {"coexistence", "partition", "boundary_lemma", "peierls_injective",
            "peierls_magnification", "mass_le_bound", "chain_glauber", "chain_loop"} <= names


def test_verify_torus(tmp_path):
    code, text = run(tmp_path, "v.json", "verify", "--n", "2", "--bc", "periodic")
    assert code == EXIT_OK
    assert "ltau_cycle_parity" in {e["name"] for e in json.loads(text)["checks"]}


def test_verify_negative_control():
    ledger, _ = cmd_verify(resolve_config({"n": 2}), classifier=lambda s: PartitionClass.GREEN_CROSS)
    bad = {e["name"] for e in ledger if not e["passed"]}
    assert bad == {"partition"}


def test_verify_exit_code(monkeypatch):
    import icebox.cli as cli

    real = cli.run_verify_suite
    monkeypatch.setattr(cli, "run_verify_suite",
                        lambda cfg, classifier=None: real(cfg, lambda s: PartitionClass.RED_CROSS))
    assert main(["verify", "--n", "1"]) == EXIT_VERIFY


def test_geom_and_saw(tmp_path):
    code, text = run(tmp_path, "g.json", "geom", "--n", "2")
    doc = json.loads(text)
    assert code == EXIT_OK and doc["geometry"]["n"] == 2
    code, text = run(tmp_path, "s.csv", "saw", "--steps", "10", "--n", "4", "--c-values", "3,4")
    assert code == EXIT_OK
    body = text.split("\n\n")
    assert len(rows_of(body[0])) == 12
    assert len(rows_of(body[1])) == 1 + 2 * 4


def test_trace(tmp_path):
    code, text = run(tmp_path, "t.csv", "trace", "--n", "3", "--steps", "300", "--stride", "100")
    rows = rows_of(text)
    assert code == EXIT_OK and [r[0] for r in rows[1:]] == ["100", "200", "300"]
    assert rows[1][2] in {c.value for c in PartitionClass}


def test_config_echo():
    cfg = ExperimentConfig().validate()
    assert set(cfg.to_dict()) >= {"n", "bc", "a", "b", "c", "chain", "cap", "seed", "replicas", "stride"}
