"""Scenario runner: exit codes, artifacts, determinism, compare."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from echomem.cli import compare_traces, run_config, validate_config, ConfigError
from echomem.envelopes import make_gaussian, save_csv, time_reverse


def write_cfg(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


BASE_INPUT = {"kind": "gaussian", "delta_omega": 0.2,
              "grid": {"t_start": -30.0, "dt": 0.05, "n": 1201}}
BASE_MEDIUM = {"profile": "gaussian", "d": 10.0, "nz": 200, "n_detunings": 281, "span": 6.0}
BASE_SCHEDULE = {"t1": 35.0, "t2": 45.0}


class TestValidation:
    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            validate_config({"scenario": "nope"})

    def test_unknown_key_rejected(self):
        cfg = {"scenario": "crib-run", "medium": BASE_MEDIUM, "schedule": BASE_SCHEDULE,
               "input": BASE_INPUT, "bogus": 1}
        with pytest.raises(ConfigError, match="bogus"):
            validate_config(cfg)

    def test_nested_unknown_key_rejected(self):
        cfg = {"scenario": "crib-run", "medium": {**BASE_MEDIUM, "oops": 2},
               "schedule": BASE_SCHEDULE, "input": BASE_INPUT}
        with pytest.raises(ConfigError, match="oops"):
            validate_config(cfg)

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="requires"):
            validate_config({"scenario": "crib-run", "medium": BASE_MEDIUM})


class TestRun:
    def test_malformed_config_exit_2_no_artifacts(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        out = tmp_path / "out"
        code = run_config(str(p), str(out))
        assert code == 2
        assert not out.exists()

    def test_schema_violation_exit_2(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {"scenario": "crib-run", "medium": BASE_MEDIUM,
                                             "schedule": BASE_SCHEDULE, "input": BASE_INPUT,
                                             "nope": 0})
        assert run_config(cfg, str(tmp_path / "out")) == 2
        assert not (tmp_path / "out").exists()

    def test_runtime_error_exit_3(self, tmp_path):
        # input ends after t1: a stage precondition failure
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "crib-run", "medium": BASE_MEDIUM,
            "schedule": {"t1": 10.0, "t2": 20.0}, "input": BASE_INPUT,
        })
        assert run_config(cfg, str(tmp_path / "out")) == 3

    def test_crib_run_success(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "crib-run", "medium": BASE_MEDIUM, "schedule": BASE_SCHEDULE,
            "input": BASE_INPUT, "solver": {"substeps": 2},
            "assertions": {"efficiency_min": 0.99, "fidelity_min": 0.99},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["efficiency"] >= 0.99
        assert all(a["pass"] for a in summary["assertions"])
        for f in ("input.csv", "transmitted.csv", "echo.csv", "ideal.csv", "ledger.json"):
            assert (out / f).exists()

    def test_assertion_failure_exit_1(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "crib-run", "medium": {**BASE_MEDIUM, "d": 1.0},
            "schedule": BASE_SCHEDULE, "input": BASE_INPUT,
            "assertions": {"efficiency_min": 0.99},
        })
        assert run_config(cfg, str(tmp_path / "out")) == 1

    def test_negative_control_config(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "crib-run", "medium": {**BASE_MEDIUM, "d": 30.0, "nz": 300},
            "schedule": BASE_SCHEDULE, "input": BASE_INPUT, "skip_inversion": True,
            "solver": {"substeps": 2},
            "assertions": {"efficiency_max": 0.01},
        })
        assert run_config(cfg, str(tmp_path / "out")) == 0

    def test_ideal_map_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "ideal-map", "seed": 3, "n_random": 20,
            "assertions": {"fidelity_min": 0.9999999999, "energy_tol": 1e-12},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        assert (out / "sample_input.csv").exists()

    def test_depth_sweep_monotone(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "depth-sweep", "depths": [1.0, 2.0, 5.0],
            "medium": {"profile": "gaussian", "d": 0.0, "nz": 200,
                       "n_detunings": 281, "span": 6.0},
            "schedule": BASE_SCHEDULE, "input": BASE_INPUT,
            "assertions": {"monotone": True},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        rows = (out / "sweep.csv").read_text().strip().splitlines()
        assert rows[0] == "d,efficiency,fidelity_vs_ideal,phase_vs_ideal"
        assert len(rows) == 4

    def test_depth_sweep_threads_deterministic(self, tmp_path):
        base = {
            "scenario": "depth-sweep", "depths": [1.0, 2.0],
            "medium": {"profile": "gaussian", "d": 0.0, "nz": 200,
                       "n_detunings": 281, "span": 6.0},
            "schedule": BASE_SCHEDULE, "input": BASE_INPUT,
        }
        c1 = write_cfg(tmp_path, "c1.json", {**base, "output_dir": str(tmp_path / "o1")})
        c2 = write_cfg(tmp_path, "c2.json", {**base, "output_dir": str(tmp_path / "o2")})
        assert run_config(c1, None, threads=1) == 0
        assert run_config(c2, None, threads=2) == 0
        assert (tmp_path / "o1" / "sweep.csv").read_text() == (
            tmp_path / "o2" / "sweep.csv").read_text()

    def test_timebin_scenario_ideal(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "timebin", "backend": "ideal", "chi12": 0.4,
            "qubit": {"r": 0.7071067811865476, "phi": 1.0471975511965976, "tau": 20.0,
                      "bin": {"delta_omega": 0.5}},
            "assertions": {"r_tol": 1e-9, "phi_tol": 1e-9, "global_phase_tol": 1e-9},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        s = json.loads((out / "summary.json").read_text())
        assert s["global_phase"] == pytest.approx(-0.4, abs=1e-9)

    def test_interferometer_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "interferometer", "backend": "ideal",
            "pulse": {"kind": "gaussian", "delta_omega": 1.0,
                      "grid": {"t_start": -8.0, "dt": 0.02, "n": 801}},
            "mz": {"delta_L": 10.0, "alpha_sweep": {"from": 0.0, "to": 3.141592653589793,
                                                    "n": 9}},
            "assertions": {"visibility_min": 0.999, "null_tol": 1e-3,
                           "sideband_spread_tol": 1e-6},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        rows = (out / "fringe.csv").read_text().strip().splitlines()
        assert rows[0] == "alpha,I_early,I_central,I_late"
        assert len(rows) == 10

    def test_oracle_check_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "oracle-check",
            "oracle": {"n_atoms": 120, "n_modes_per_family": 120, "d": 3.0,
                       "delta_omega": 0.3},
            "schedule": {"t1": 24.0, "t2": 30.0},
            "input": {"kind": "gaussian", "delta_omega": 0.3,
                      "grid": {"t_start": -20.0, "dt": 0.05, "n": 801}},
            "medium": {"profile": "gaussian", "d": 3.0, "nz": 200,
                       "n_detunings": 281, "span": 6.0},
            "assertions": {"fidelity_min": 0.98, "efficiency_tol": 0.02},
        })
        out = tmp_path / "out"
        assert run_config(cfg, str(out)) == 0
        assert (out / "oracle_echo.csv").exists()

    def test_reversal_identity_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "reversal-identity",
            "oracle": {"n_atoms": 40, "n_modes_per_family": 32, "d": 2.0,
                       "delta_omega": 0.3},
            "schedule": {"t1": 2.0, "t_inv": 4.0, "t2": 6.0},
            "steps": [32, 64],
            "assertions": {"deviation_max": 0.1, "order_min": 0.8},
        })
        assert run_config(cfg, str(tmp_path / "out")) == 0

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ECHOMEM_OUT", str(tmp_path / "envout"))
        cfg = write_cfg(tmp_path, "c.json", {
            "scenario": "ideal-map", "n_random": 2,
        })
        assert run_config(cfg, None) == 0
        assert (tmp_path / "envout" / "summary.json").exists()


class TestCompare:
    def test_identical_traces(self, tmp_path):
        g = make_gaussian(1.0)
        p = tmp_path / "a.csv"
        save_csv(g, p)
        report, code = compare_traces(str(p), str(p), tol=1e-12)
        assert code == 0
        assert report["fidelity"] == pytest.approx(1.0, abs=1e-12)
        assert report["max_amplitude_deviation"] == 0.0

    def test_time_reversed_asymmetric_trace_fails(self, tmp_path):
        from echomem.envelopes import SampledEnvelope
        t = np.linspace(-6, 10, 801)
        samples = np.exp(-0.5 * t**2) + 0.5 * np.exp(-0.5 * (t - 4.0) ** 2)
        env = SampledEnvelope(-6.0, t[1] - t[0], samples.astype(complex))
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        save_csv(env, a)
        save_csv(time_reverse(env, 0.0), b)
        report, code = compare_traces(str(a), str(b), tol=1e-3)
        assert code == 1
        assert report["fidelity"] < 1.0

    def test_resampled_grids(self, tmp_path):
        a = make_gaussian(1.0, t_start=-10.0, dt=0.05, n=401)
        b = make_gaussian(1.0, t_start=-10.0, dt=0.03, n=668)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        save_csv(a, pa)
        save_csv(b, pb)
        report, code = compare_traces(str(pa), str(pb), tol=1e-4)
        assert code == 0


class TestConsoleEntry:
    def test_module_invocation(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scenario": "ideal-map", "n_random": 2,
                                   "output_dir": str(tmp_path / "out")}))
        proc = subprocess.run(
            [sys.executable, "-m", "echomem.cli", "run", str(cfg)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "PASS" in proc.stdout
