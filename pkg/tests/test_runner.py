import json
import os
from pathlib import Path

import numpy as np
import pytest

from pricelab import cli, runner
from pricelab.errors import ConfigError

MINIMAL_FLAT = """
name = "mini"

[background]
M = 1.0
flat = true

[grid]
rstar_min = 0.0
rstar_max = 60.0
h = 0.1
cfl = 1.0
t_max = 30.0
left_boundary = "reflecting"

[data]
profile = "gaussian"
center = 10.0
width = 1.0
amplitude = 1.0

[observers]
r = [2.0, 4.5]

[analyses]
run = []

[output]
directory = "%s"
stride = 5
formats = ["csv", "json"]
"""


@pytest.fixture
def flat_config(tmp_path):
    cfg = tmp_path / "mini.toml"
    cfg.write_text(MINIMAL_FLAT % (tmp_path / "runs"))
    return cfg


class TestConfig:
    def test_unknown_field_is_hard_error(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(MINIMAL_FLAT % (tmp_path / "runs") + "\n[grid2]\nx = 1\n")
        with pytest.raises(ConfigError):
            runner.load_config(cfg)
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs")).replace("stride = 5", "stride = 5\nbogus = 1"))
        with pytest.raises(ConfigError, match="bogus"):
            runner.load_config(cfg)

    def test_missing_section(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[background]\nM = 1.0\n")
        with pytest.raises(ConfigError, match="grid"):
            runner.load_config(cfg)

    def test_type_error_with_location(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs")).replace("h = 0.1", 'h = "fine"'))
        with pytest.raises(ConfigError, match="grid"):
            runner.load_config(cfg)

    def test_json_alternate_input(self, tmp_path):
        toml_cfg = tmp_path / "mini.toml"
        toml_cfg.write_text(MINIMAL_FLAT % (tmp_path / "runs"))
        parsed = runner.load_config(toml_cfg)
        json_cfg = tmp_path / "mini.json"
        json_cfg.write_text(json.dumps(parsed))
        assert runner.load_config(json_cfg) == parsed

    def test_spinning_background_rejected_for_evolution(self, tmp_path):
        cfg = tmp_path / "spin.toml"
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs"))
                       .replace("flat = true", "a = 0.5"))
        with pytest.raises(ConfigError, match="a != 0"):
            runner.load_config(cfg)

    def test_curve_parse(self):
        label, fn = runner._parse_curve("t/2")
        assert fn(10.0) == 5.0
        label, fn = runner._parse_curve("t-50")
        assert fn(60.0) == 10.0
        with pytest.raises(ConfigError):
            runner._parse_curve("r*t")


class TestRun:
    def test_flat_huygens_end_to_end(self, flat_config, tmp_path):
        run_dir = runner.run(flat_config)
        assert (run_dir / "manifest.json").exists()
        rows = (run_dir / "trajectory.csv").read_text().strip().split("\n")
        assert rows[0] == "t,r_obs,psi,dpsi_dt,dpsi_drstar"
        data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
        late_interior = data[(data[:, 0] > 25.0)]
        assert np.abs(late_interior[:, 2]).max() <= 1e-8  # post-passage floor

    def test_rerun_is_byte_identical(self, flat_config):
        d1 = runner.run(flat_config)
        d2 = runner.run(flat_config)
        assert d1 != d2  # append-only: new timestamped directory
        m1 = json.loads((d1 / "manifest.json").read_text())
        m2 = json.loads((d2 / "manifest.json").read_text())
        assert m1["config_hash"] == m2["config_hash"]
        assert m1["files"] == m2["files"]  # identical checksums

    def test_in_place_reuses_directory(self, flat_config):
        d1 = runner.run(flat_config, in_place=True)
        d2 = runner.run(flat_config, in_place=True)
        assert d1 == d2

    def test_report_text(self, flat_config):
        d = runner.run(flat_config)
        text = runner.report(d)
        assert "config hash" in text
        assert "files" in text

    def test_norms_commutators_sobolev_analyses(self, tmp_path):
        cfg = tmp_path / "full.toml"
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs"))
                       .replace('run = []',
                                'run = ["norms", "commutators", "sobolev"]\n\n'
                                '[analyses.norms]\nvariants = ["LE", "LE1"]\n\n'
                                '[analyses.sobolev]\nT = [32.0, 64.0]')
                       .replace("stride = 5", "stride = 5\nsnapshot_stride = 20"))
        d = runner.run(cfg)
        norms = json.loads((d / "reports" / "norms.json").read_text())
        assert {r["variant"] for r in norms} == {"LE", "LE1"}
        for r in norms:
            assert set(r) == {"run_id", "variant", "interval", "value", "per_block_values"}
            assert r["value"] > 0
        comm = json.loads((d / "reports" / "commutators.json").read_text())
        assert min(comm["observed_orders"]) >= 1.9
        sob = json.loads((d / "reports" / "sobolev.json").read_text())
        ratios = [row["ratio"] for row in sob["rows"]]
        assert max(ratios) / min(ratios) < 1.5
        assert "snapshots.npz" not in json.loads((d / "manifest.json").read_text())["files"]

    def test_norms_requires_snapshots(self, flat_config, tmp_path):
        cfg = tmp_path / "nosnap.toml"
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs")).replace('run = []', 'run = ["norms"]'))
        with pytest.raises(ConfigError, match="snapshot"):
            runner.run(cfg)

    def test_price_l0_reference_config(self, tmp_path):
        # the committed reference experiment reports the Price exponent
        d = runner.run(Path(__file__).resolve().parent.parent / "configs" / "price_l0.toml",
                       out_dir=tmp_path / "runs")
        rep = json.loads((d / "reports" / "tail.json").read_text())[0]
        assert rep["p_final"] is not None
        assert abs(rep["p_final"] + 3.0) <= 0.25
        assert (d / "plots" / "tail.svg").exists()


SHORT_TAIL = """
name = "short_tail"

[background]
M = 1.0
ell = 0

[grid]
rstar_min = -50.0
rstar_max = 170.0
h = 0.16
cfl = 0.98
t_max = 150.0

[data]
profile = "gaussian"
center = 20.0
width = 2.0
amplitude = 1.0
momentarily_static = false
direction = "outgoing"

[observers]
r = [10.0]

[analyses]
run = ["tail"]

[analyses.tail]
window = [60.0, 140.0]
plateau_tol = 100.0

[output]
directory = "%s"
stride = 10
formats = ["csv", "json"]
"""


class TestSweep:
    def test_resolution_sweep_exponent_stable(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(SHORT_TAIL % (tmp_path / "runs")
                       + "\n[sweep]\nresolution = [0.16, 0.08]\n")
        sweep_dir = runner.sweep(cfg, workers=1)
        agg = json.loads((sweep_dir / "aggregate.json").read_text())
        assert [c["status"] for c in agg["cells"]] == ["ok", "ok"]
        table = agg["convergence"]["table"]
        assert len(table) == 2
        # exponent estimate is resolution stable at the per-mille level
        assert abs(table[0]["p_final"] - table[1]["p_final"]) < 0.01

    def test_partial_failure_isolation(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        # negative resolution poisons one cell only
        cfg.write_text(MINIMAL_FLAT % (tmp_path / "runs")
                       + "\n[sweep]\nresolution = [0.2, -0.1]\n")
        sweep_dir = runner.sweep(cfg, workers=1)
        agg = json.loads((sweep_dir / "aggregate.json").read_text())
        by_label = {c["label"]: c for c in agg["cells"]}
        assert by_label["h0.2"]["status"] == "ok"
        assert by_label["h-0.1"]["status"] == "failed"
        assert agg["failed_cells"] == ["h-0.1"]
        ok_dir = Path(by_label["h0.2"]["run_dir"])
        assert (ok_dir / "manifest.json").exists()  # intact output

    def test_epsilon_delta_sweep_cells(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(SHORT_TAIL % (tmp_path / "runs")
                       + "\n[sweep]\nepsilon = [0.0, 0.01]\ndelta = [0.5]\n")
        sweep_dir = runner.sweep(cfg, workers=1)
        agg = json.loads((sweep_dir / "aggregate.json").read_text())
        assert {c["label"] for c in agg["cells"]} == {"eps0.0_delta0.5", "eps0.01_delta0.5"}
        assert all(c["status"] == "ok" for c in agg["cells"])
        # both cells see the same pre-asymptotic exponent at this short horizon
        ps = [c["p_final"] for c in agg["cells"]]
        assert abs(ps[0] - ps[1]) < 0.05

    def test_requires_sweep_section(self, flat_config):
        with pytest.raises(ConfigError):
            runner.sweep(flat_config)


class TestCLI:
    def test_selftest_exit_zero(self, capsys):
        assert cli.main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_config_error_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[background]\nM = 1.0\nwhoops = 3\n")
        assert cli.main(["run", str(bad)]) == 2

    def test_missing_config_exit_two(self):
        assert cli.main(["run", "/nonexistent/nope.toml"]) == 2

    def test_numerical_error_exit_three(self, tmp_path):
        cfg = tmp_path / "bad_obs.toml"
        cfg.write_text((MINIMAL_FLAT % (tmp_path / "runs")).replace("r = [2.0, 4.5]", "r = [500.0]"))
        assert cli.main(["run", str(cfg)]) == 3

    def test_run_and_report_roundtrip(self, flat_config, capsys):
        assert cli.main(["run", str(flat_config)]) == 0
        run_dir = capsys.readouterr().out.strip()
        assert cli.main(["report", run_dir]) == 0
        assert "files" in capsys.readouterr().out
