from __future__ import annotations

import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from dsqubits.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _scenario(tmp_path, text, name="s.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_rates_table(tmp_path):
    assert _run(tmp_path, "rates", "--config", str(SCENARIOS / "rate_curve.toml")) == EXIT_OK
    rows = _csv(tmp_path / "rate_curve_rates.csv")
    assert len(rows) == 200
    d = [float(r["d_over_xi"]) for r in rows]
    assert d == sorted(d) and d[0] == 0.5 and d[-1] == 10.0
    assert all(abs(float(r["Gamma_over_gamma"])) <= 1 for r in rows)
    # near-degenerate rows are close together, where Gamma approaches gamma
    flagged = [float(r["d_over_xi"]) for r in rows if r["flag"]]
    assert flagged and max(flagged) < 2.0


def test_rates_bitwise_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    cfg = _scenario(tmp_path, "[pair.grid]\nstart = 1.0\nstop = 9.0\ncount = 17\n")
    assert main(["rates", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["rates", "--config", cfg, "--out", str(b), "--format", "csv"]) == EXIT_OK
    assert (a / "run_rates.csv").read_bytes() == (b / "run_rates.csv").read_bytes()


def test_rates_json_format(tmp_path):
    cfg = _scenario(tmp_path, "[pair.grid]\nstart = 1.0\nstop = 3.0\ncount = 3\n")
    assert _run(tmp_path, "rates", "--config", cfg, "--format", "json") == EXIT_OK
    data = json.loads((tmp_path / "run_rates.json").read_text())
    assert data["columns"][0] == "d_over_xi" and len(data["rows"]) == 3


def test_evolve_entangled_close(tmp_path):
    assert _run(tmp_path, "evolve", "--config", str(SCENARIOS / "entangled_close.toml")) == EXIT_OK
    stem = tmp_path / "entangled_close"
    traj = _csv(f"{stem}_trajectory.csv")
    assert {r["source"] for r in traj} == {"closed_form", "lindblad"}
    conc = _csv(f"{stem}_concurrence.csv")
    assert len(conc) == 2 * 2001
    events = json.loads(Path(f"{stem}_events.json").read_text())
    assert events["schema"] == 1
    assert len(events["deaths"]) == 1 and len(events["revivals"]) == 1
    assert events["integrator"]["max_deviation"] < 1e-6
    # the integrator's own event detection agrees with the refined closed-form events
    assert events["integrator"]["deaths_gamma_t"][0] == pytest.approx(events["deaths_gamma_t"][0], abs=0.02)


def test_evolve_independent_death_time(tmp_path):
    assert _run(tmp_path, "evolve", "--config", str(SCENARIOS / "independent_esd.toml")) == EXIT_OK
    events = json.loads((tmp_path / "independent_esd_events.json").read_text())
    assert events["rates"]["Gamma"] == 0.0 and events["rates"]["eta"] == 0.0
    (death,) = events["deaths_gamma_t"]
    assert death == pytest.approx(math.log(2), rel=1e-2)
    assert events["revivals"] == []


def test_paper_literal_fails_the_oracle(tmp_path):
    # the uncorrected exponents only touch single-excitation coherences,
    # so the initial state needs a rho_{+-} entry
    matrix = [[[0.0, 0.0]] * 4 for _ in range(4)]
    matrix[1][1] = matrix[2][2] = [0.5, 0.0]
    matrix[1][2] = matrix[2][1] = [0.5, 0.0]
    cfg = {"initial_state": {"kind": "custom", "matrix": matrix}, "run": {"t_end": 5.0, "samples": 101}}
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(cfg))
    assert _run(tmp_path, "evolve", "--config", str(path)) == EXIT_OK
    assert _run(tmp_path, "evolve", "--config", str(path), "--paper-literal") == EXIT_NUMERIC


def test_config_errors_exit_one(tmp_path, capsys):
    bad = _scenario(tmp_path, "[condensate]\nnu = 0.75\n")
    assert _run(tmp_path, "evolve", "--config", bad) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert _run(tmp_path, "evolve", "--config", str(tmp_path / "missing.toml")) == EXIT_CONFIG
    # a grid cannot be evolved
    assert _run(tmp_path, "evolve", "--config", str(SCENARIOS / "rate_curve.toml")) == EXIT_CONFIG
    # no resonance below nu = 1/2
    low = _scenario(tmp_path, "[condensate]\nnu = 0.4\ng = 1.0\n", "low.toml")
    assert _run(tmp_path, "evolve", "--config", low) == EXIT_CONFIG


def test_estimate_requires_si_units(tmp_path):
    assert _run(tmp_path, "estimate", "--config", str(SCENARIOS / "entangled_close.toml")) == EXIT_CONFIG


@pytest.fixture(scope="module")
def estimate(tmp_path_factory):
    out = tmp_path_factory.mktemp("estimate")
    assert main(["estimate", "--config", str(SCENARIOS / "estimate_rb85.toml"), "--out", str(out)]) == EXIT_OK
    return json.loads((out / "estimate_rb85_estimate.json").read_text())


def test_estimate_report(estimate):
    assert estimate["omega0_over_2pi_hz"] == pytest.approx(500.0, rel=1e-10)
    assert estimate["mu_over_h_hz"] == pytest.approx(2000.0, rel=1e-10)
    assert estimate["dark_period_ms"] == pytest.approx(estimate["t_revival_ms"] - estimate["t_death_ms"],
                                                       rel=1e-12)
    assert 0 < estimate["Gamma_over_2pi_hz"] <= estimate["gamma_over_2pi_hz"]
    assert estimate["t_death_large_separation_ms"] < estimate["t_death_ms"]


@pytest.mark.xfail(strict=True, reason="gamma/2pi is about 0.08 Hz at densities of 1e8 to 1e9 per metre")
def test_target_si_decay_rate(estimate):
    assert estimate["gamma_over_2pi_hz"] == pytest.approx(29.0, rel=0.3)


@pytest.mark.xfail(strict=True, reason="far apart the death time is set by gamma, about 6.5 s")
def test_target_large_separation_death_time(estimate):
    assert estimate["t_death_large_separation_ms"] == pytest.approx(2.0, rel=0.5)


@pytest.mark.xfail(strict=True, reason="at d = 4 xi, Gamma/gamma = cos(k0 d) is about 0.77")
def test_target_mixed_state_times(tmp_path):
    assert _run(tmp_path, "evolve", "--config", str(SCENARIOS / "mixed_d4.toml")) == EXIT_OK
    events = json.loads((tmp_path / "mixed_d4_events.json").read_text())
    assert events["deaths_gamma_t"][0] == pytest.approx(0.75, rel=0.25)
    assert events["revivals_gamma_t"][0] == pytest.approx(1.4, rel=0.25)


def test_selftest(capsys):
    assert main(["selftest"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and all(line.startswith("PASS") for line in lines)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dsqubits", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("dsqubits ")
