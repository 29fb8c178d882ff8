"""Scenario setup, the time loop, convergence studies, and the CLI."""

import json
import os

import numpy as np
import pytest

from kinhy.cli import main as cli_main
from kinhy.config import make_config
from kinhy.coupling import project_to_macro
from kinhy.driver import (RunResult, convergence_timesteps,
                          run_convergence_study, run_simulation, state_vector)
from kinhy.errors import ConfigError
from kinhy.io import read_snapshot
from kinhy.mesh import FLUID, KINETIC, OBSTACLE
from kinhy.scenarios import (boundary_spec, init_scenario, initial_mask,
                             initial_primitives, richardson_order)


def _tiny(scenario="gaussian_order", **kw):
    base = dict(nx=8, ny=8, nv=10, t_end=0.02, epsilon=1e-4)
    base.update(kw)
    return make_config(scenario, **base)


# smallest velocity grid on which the equilibrium matcher still converges for
# each scenario's coldest initial cell
_NV = dict(gaussian_order=10, sod=16, kelvin_helmholtz=12, shock_bubble=12,
           cylinder=10, rectangle=10)


class TestScenarioSetup:
    def test_every_scenario_initializes(self):
        for name in ("gaussian_order", "sod", "kelvin_helmholtz",
                     "shock_bubble", "cylinder", "rectangle"):
            extra = dict(obstacle_width=0.2, obstacle_height=0.15) \
                if name == "rectangle" else {}
            cfg = make_config(name, nx=12, ny=12, nv=_NV[name], **extra)
            setup = init_scenario(cfg)
            assert setup.f.shape == (setup.vgrid.K, 12, 12)
            assert setup.U.shape == (4, 12, 12)
            assert setup.mask.shape == (12, 12)
            assert setup.gamma == 2.0
            assert np.isfinite(setup.f).all() and np.isfinite(setup.U).all()

    def test_distribution_carries_the_conserved_state(self):
        """The lifted initial f must reproduce U through its moments."""
        setup = init_scenario(_tiny())
        for j, i in ((0, 0), (3, 5), (7, 7), (4, 4)):
            U = project_to_macro(setup.f[:, j, i], setup.vgrid)
            np.testing.assert_allclose(U, setup.U[:, j, i],
                                       rtol=1e-12, atol=1e-12)

    def test_boundary_spec_maps_axes(self):
        cfg = make_config("sod", nx=8, ny=8, nv=16)
        bc = boundary_spec(cfg)
        assert bc.left == bc.right == "periodic"
        assert bc.bottom == bc.top == "zero_gradient"

    def test_sod_initial_state_is_a_vertical_jump(self):
        cfg = make_config("sod", nx=5, ny=10, nv=16)
        setup = init_scenario(cfg)
        rho, ux, uy, P = initial_primitives(cfg, setup.grid)
        assert set(np.unique(rho)) == {1.0, 0.125}
        assert set(np.unique(P)) == {1.0, 0.03125}
        assert not ux.any() and not uy.any()
        # dense side below, light side above
        assert (rho[:5] == 1.0).all() and (rho[5:] == 0.125).all()

    def test_obstacle_cells_hold_an_inert_state(self):
        cfg = make_config("cylinder", nx=20, ny=20, nv=10)
        setup = init_scenario(cfg)
        obst = setup.grid.obstacle != 0
        assert obst.any()
        rho, ux, uy, P = initial_primitives(cfg, setup.grid)
        assert (rho[obst] == 1.0).all() and (P[obst] == 1.0).all()
        assert not ux[obst].any() and not uy[obst].any()
        assert (setup.mask[obst] == OBSTACLE).all()
        assert (ux[~obst] == 2.0).all()

    def test_mask_coin_flip_is_seeded(self):
        cfg_a = _tiny(seed=11)
        cfg_b = _tiny(seed=11)
        cfg_c = _tiny(seed=12)
        grid = init_scenario(cfg_a).grid
        m_a = initial_mask(cfg_a, grid)
        m_b = initial_mask(cfg_b, grid)
        m_c = initial_mask(cfg_c, grid)
        np.testing.assert_array_equal(m_a, m_b)
        assert (m_a != m_c).any()
        assert set(np.unique(m_a)) == {FLUID, KINETIC}

    def test_pure_modes_force_one_label(self):
        grid = init_scenario(_tiny()).grid
        mk = initial_mask(_tiny(mode="full_kinetic"), grid)
        me = initial_mask(_tiny(mode="full_euler"), grid)
        assert (mk == KINETIC).all()
        assert (me == FLUID).all()

    def test_other_scenarios_start_fluid(self):
        cfg = make_config("sod", nx=5, ny=10, nv=16)
        grid = init_scenario(cfg).grid
        assert (initial_mask(cfg, grid) == FLUID).all()

    def test_unknown_scenario_name_in_primitives(self):
        cfg = _tiny()
        grid = init_scenario(cfg).grid
        cfg.scenario = "warp"
        with pytest.raises(ConfigError, match="unknown scenario"):
            initial_primitives(cfg, grid)


class TestRichardson:
    def test_exact_powers(self):
        errs = [6.4e-3 / 8.0 ** k for k in range(4)]
        orders = richardson_order(errs)
        np.testing.assert_allclose(orders, [3.0, 3.0, 3.0], rtol=1e-12)

    def test_needs_two_positive_errors(self):
        with pytest.raises(ValueError):
            richardson_order([1e-3])
        with pytest.raises(ValueError):
            richardson_order([1e-3, 0.0])


class TestRunSimulation:
    def test_smoke_reaches_t_end(self):
        res = run_simulation(_tiny())
        assert isinstance(res, RunResult)
        assert res.steps >= 1
        assert res.t == pytest.approx(0.02, rel=1e-12)
        assert set(res.timings) == {"setup", "regimes", "stepping", "io"}
        assert res.wall_seconds == pytest.approx(sum(res.timings.values()))
        assert np.isfinite(res.U).all() and np.isfinite(res.f).all()

    def test_stats_row_per_step(self):
        res = run_simulation(_tiny())
        assert len(res.stats.t) == res.steps
        assert res.stats.t[0] == 0.0
        assert all(0.0 <= fr <= 1.0 for fr in res.stats.fraction)

    def test_fixed_dt_controls_the_step_count(self):
        res = run_simulation(_tiny(), fixed_dt=0.005)
        assert res.steps == 4
        assert res.t == pytest.approx(0.02, rel=1e-12)

    def test_config_dt_acts_as_fixed_dt(self):
        res = run_simulation(_tiny(dt=0.01))
        assert res.steps == 2

    def test_fixed_dt_must_divide_t_end(self):
        with pytest.raises(ConfigError, match="divide"):
            run_simulation(_tiny(), fixed_dt=0.003)

    def test_observer_sees_every_step(self):
        seen = []
        run_simulation(_tiny(), fixed_dt=0.005,
                       observer=lambda n, t, dom, f, U: seen.append((n, t)))
        assert [n for n, _ in seen] == [1, 2, 3, 4]
        np.testing.assert_allclose([t for _, t in seen],
                                   [0.005, 0.010, 0.015, 0.020], rtol=1e-12)

    def test_all_four_modes_run(self):
        for mode in ("hybrid", "hybrid_loc", "full_kinetic", "full_euler"):
            res = run_simulation(_tiny(mode=mode), fixed_dt=0.01)
            assert res.steps == 2
            assert np.isfinite(res.U).all()

    def test_output_files(self, tmp_path):
        out = str(tmp_path)
        cfg = _tiny(snapshot_times=(0.01, 0.02), probes=((2, 3),))
        run_simulation(cfg, out_dir=out)
        names = sorted(os.listdir(out))
        assert "snapshot_t0.010000.csv" in names
        assert "snapshot_t0.020000.csv" in names
        assert "kinetic_fraction.csv" in names
        assert "probe_i2_j3_t0.010000.csv" in names
        assert "probe_i2_j3_t0.020000.csv" in names
        # t_end already listed, so exactly the two requested snapshots
        assert sum(n.startswith("snapshot_") for n in names) == 2

    def test_final_snapshot_added_when_not_requested(self, tmp_path):
        out = str(tmp_path)
        run_simulation(_tiny(), out_dir=out)
        names = os.listdir(out)
        assert "snapshot_t0.020000.csv" in names
        cols = read_snapshot(os.path.join(out, "snapshot_t0.020000.csv"))
        assert (cols["rho"] > 0).all() and (cols["T"] > 0).all()
        assert cols["regime"].max() <= 2

    def test_state_vector_shape_follows_the_mode(self):
        res_h = run_simulation(_tiny(), fixed_dt=0.01)
        res_k = run_simulation(_tiny(mode="full_kinetic"), fixed_dt=0.01)
        K = res_k.setup.vgrid.K
        assert state_vector(res_h).shape == (4 * 8 * 8,)
        assert state_vector(res_k).shape == (K * 8 * 8,)

    def test_runs_are_reproducible(self):
        a = run_simulation(_tiny(), fixed_dt=0.005)
        b = run_simulation(_tiny(), fixed_dt=0.005)
        np.testing.assert_array_equal(a.U, b.U)
        np.testing.assert_array_equal(a.f, b.f)
        np.testing.assert_array_equal(a.dom.mask, b.dom.mask)


class TestConvergenceStudy:
    def test_ladder_divides_t_end(self):
        dts = convergence_timesteps(0.86, 0.0135, 3)
        assert len(dts) == 4
        for k, dt in enumerate(dts):
            n = 0.86 / dt
            assert n == pytest.approx(round(n), abs=1e-9)
            if k:
                assert dts[k - 1] / dt == pytest.approx(2.0, rel=1e-12)

    def test_rows_structure(self):
        cfg = _tiny(t_end=0.05)
        rows = run_convergence_study(cfg, dts=[0.025, 0.0125, 0.00625])
        assert len(rows) == 2
        dt0, err0, order0, mode0, eps0 = rows[0]
        assert (dt0, order0, mode0, eps0) == (0.025, None, "hybrid", 1e-4)
        assert err0 > 0
        dt1, err1, order1, _, _ = rows[1]
        assert dt1 == pytest.approx(0.0125, rel=1e-12)
        assert isinstance(order1, float) and err1 > 0

    def test_multiple_modes_stack(self):
        cfg = _tiny(t_end=0.05)
        rows = run_convergence_study(cfg, dts=[0.025, 0.0125],
                                     modes=("hybrid", "full_euler"))
        assert [r[3] for r in rows] == ["hybrid", "full_euler"]

    def test_requested_ladder_is_snapped_to_exact_halving(self):
        cfg = _tiny(t_end=0.05)
        rows = run_convergence_study(cfg, dts=[0.025, 0.013, 0.007])
        assert rows[0][0] == pytest.approx(0.025, rel=1e-15)
        assert rows[1][0] == pytest.approx(0.0125, rel=1e-15)

    def test_non_halving_ladder_rejected(self):
        cfg = _tiny(t_end=0.05)
        with pytest.raises(ConfigError, match="halve"):
            run_convergence_study(cfg, dts=[0.025, 0.024])


class TestCli:
    def _write(self, tmp_path, body):
        path = tmp_path / "run.toml"
        path.write_text(body)
        return str(path)

    def _gaussian_toml(self, tmp_path, out, extra=""):
        return self._write(tmp_path, f"""
[scenario]
scenario = "gaussian_order"

[grid]
nx = 8
ny = 8

[velocity]
nv = 10

[physics]
epsilon = 1e-4

[time]
t_end = 0.02

[output]
out_dir = "{out}"
{extra}
""")

    def test_run_emits_outputs_and_manifest(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        cfg = self._gaussian_toml(tmp_path, out,
                                  extra="snapshot_times = [0.02]\n")
        assert cli_main(["run", cfg, "--threads", "1"]) == 0
        assert "finished" in capsys.readouterr().out
        names = os.listdir(out)
        assert "manifest.json" in names
        assert "snapshot_t0.020000.csv" in names
        assert "kinetic_fraction.csv" in names
        with open(os.path.join(out, "manifest.json")) as fh:
            man = json.load(fh)
        assert man["threads"] >= 1
        assert man["steps"] >= 1
        assert man["t_final"] == pytest.approx(0.02, rel=1e-9)
        assert man["config"]["scenario"] == "gaussian_order"
        assert set(man["timings_seconds"]) == {"setup", "regimes",
                                               "stepping", "io"}

    def test_run_mode_alias_and_probe_flags(self, tmp_path):
        out = str(tmp_path / "out")
        cfg = self._gaussian_toml(tmp_path, out,
                                  extra="snapshot_times = [0.02]\n")
        rc = cli_main(["run", cfg, "--mode", "euler", "--probe", "2,3",
                       "--threads", "1"])
        assert rc == 0
        with open(os.path.join(out, "manifest.json")) as fh:
            man = json.load(fh)
        assert man["config"]["mode"] == "full_euler"
        assert man["config"]["probes"] == [[2, 3]]
        assert "probe_i2_j3_t0.020000.csv" in os.listdir(out)

    def test_run_bad_probe_spec(self, tmp_path):
        cfg = self._gaussian_toml(tmp_path, str(tmp_path / "out"))
        with pytest.raises(SystemExit, match="bad --probe"):
            cli_main(["run", cfg, "--probe", "xy"])

    def test_convergence_writes_table(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        cfg = self._gaussian_toml(tmp_path, out)
        rc = cli_main(["convergence", cfg, "--dts", "0.01,0.005",
                       "--modes", "euler", "--threads", "1"])
        assert rc == 0
        assert "order" in capsys.readouterr().out
        lines = open(os.path.join(out, "convergence.csv")).read().splitlines()
        assert lines[0] == "dt,err,order,mode,epsilon"
        assert len(lines) == 2
        assert lines[1].split(",")[3] == "full_euler"
        with open(os.path.join(out, "manifest.json")) as fh:
            assert json.load(fh)["modes"] == ["full_euler"]

    def test_convergence_unknown_mode(self, tmp_path):
        cfg = self._gaussian_toml(tmp_path, str(tmp_path / "out"))
        with pytest.raises(SystemExit, match="unknown mode"):
            cli_main(["convergence", cfg, "--modes", "spectral"])

    def test_errors_exit_nonzero_with_message(self, tmp_path, capsys):
        cfg = self._gaussian_toml(tmp_path, str(tmp_path / "out"))
        rc = cli_main(["convergence", cfg, "--dts", "0.01,0.009",
                       "--threads", "1"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_scenarios_listing(self, capsys):
        assert cli_main(["scenarios"]) == 0
        out = capsys.readouterr().out
        for name in ("gaussian_order", "sod", "kelvin_helmholtz",
                     "shock_bubble", "cylinder", "rectangle"):
            assert name in out

    def test_check_tableau(self, capsys):
        assert cli_main(["check-tableau", "--order", "3"]) == 0
        assert "PASS" in capsys.readouterr().out
