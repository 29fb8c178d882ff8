"""Time loop: regime updates, stepping, statistics and output emission."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import io
from .config import ScenarioConfig
from .coupling import DecompositionStats, DomainDecomposition, lift_to_kinetic
from .errors import ConfigError
from .mesh import FLUID, conserved_to_primitive
from .params import CouplingThresholds, PhysicsParams
from .scenarios import ProblemSetup, init_scenario, richardson_order
from .stepper import ars233, cfl_timestep, coupled_imex_step, loc_step

_TIME_EPS = 1e-9


@dataclass
class RunResult:
    """Final state and diagnostics of one simulation."""

    config: ScenarioConfig
    setup: ProblemSetup
    dom: DomainDecomposition
    f: np.ndarray
    U: np.ndarray
    stats: DecompositionStats
    steps: int
    t: float
    timings: dict = field(default_factory=dict)

    @property
    def wall_seconds(self) -> float:
        return sum(self.timings.values())


def physics_from(config: ScenarioConfig, gamma: float) -> PhysicsParams:
    return PhysicsParams(eps=config.epsilon, beta=config.beta,
                         tau_model=config.tau_model,
                         constants_dim=config.constants_dim, gamma=gamma)


def thresholds_from(config: ScenarioConfig) -> CouplingThresholds:
    return CouplingThresholds(eta=config.eta, delta=config.delta,
                              buffer_width=config.buffer_width)


def state_vector(result: RunResult) -> np.ndarray:
    """Operand for temporal error norms.

    Hybrid runs compare the conserved fields per cell (the moments of f on
    kinetic cells); a pure kinetic run compares the full distribution, a pure
    fluid run its conserved fields.
    """
    sel = result.dom.mask != 2
    if result.config.mode == "full_kinetic":
        return result.f[:, sel].ravel().copy()
    return result.U[:, sel].ravel().copy()


def _snapshot(out_dir, t, result_cfg, dom, f, U, gamma, vgrid):
    dom.project_all(f, U)
    prim = conserved_to_primitive(U, gamma, where="snapshot")
    path = os.path.join(out_dir, io.snapshot_filename(t))
    io.write_snapshot(path, dom.grid, prim.rho, prim.ux, prim.uy, prim.T,
                      prim.P, dom.mask)
    for (pi, pj) in result_cfg.probes:
        if dom.mask[pj, pi] == FLUID:
            fslice = lift_to_kinetic(U[:, pj, pi], vgrid, gamma)
        else:
            fslice = f[:, pj, pi]
        ppath = os.path.join(out_dir, f"probe_i{pi}_j{pj}_t{t:.6f}.csv")
        io.write_probe(ppath, vgrid, fslice)


def run_simulation(config: ScenarioConfig, out_dir: str | None = None,
                   fixed_dt: float | None = None,
                   stage_hook=None, observer=None) -> RunResult:
    """Advance the configured problem to t_end.

    ``fixed_dt`` overrides the CFL rule (it must divide t_end); ``observer``
    is called as observer(step_index, t, dom, f, U) after every step.
    """
    setup = init_scenario(config)
    grid, vgrid, bc = setup.grid, setup.vgrid, setup.bc
    phys = physics_from(config, setup.gamma)
    thresholds = thresholds_from(config)
    t_setup = time.perf_counter()
    dom = DomainDecomposition(grid, vgrid, bc, thresholds, phys)
    dom.set_mask(setup.mask)
    f, U = setup.f, setup.U
    tab = ars233()
    step_fn = loc_step if config.mode == "hybrid_loc" else coupled_imex_step
    dynamic = config.mode in ("hybrid", "hybrid_loc") and not config.freeze_mask
    stats = DecompositionStats()
    timings = {"setup": time.perf_counter() - t_setup,
               "regimes": 0.0, "stepping": 0.0, "io": 0.0}

    if fixed_dt is None and config.dt > 0.0:
        fixed_dt = config.dt
    if fixed_dt is not None:
        n_steps = round(config.t_end / fixed_dt)
        if n_steps < 1 or abs(n_steps * fixed_dt - config.t_end) > 1e-9 * config.t_end:
            raise ConfigError("fixed dt must divide t_end")

    pending = list(config.snapshot_times)
    t = 0.0
    steps = 0
    while t < config.t_end * (1.0 - 1e-12):
        tic = time.perf_counter()
        n2k = n2f = 0
        if dynamic:
            n2k, n2f = dom.update_regimes(f, U)
        stats.record(t, dom.kinetic_fraction(), n2k, n2f)
        timings["regimes"] += time.perf_counter() - tic

        tic = time.perf_counter()
        if fixed_dt is not None:
            dt = fixed_dt
        else:
            dt = cfl_timestep(grid, vgrid, U, config.cfl, setup.gamma, dom.mask)
            dt = min(dt, config.t_end - t)
            if pending:
                dt = min(dt, pending[0] - t)
        step_fn(f, U, dom, dt, tab, phys, stage_hook=stage_hook)
        t += dt
        steps += 1
        timings["stepping"] += time.perf_counter() - tic

        if pending and t >= pending[0] - _TIME_EPS:
            target = pending.pop(0)
            if out_dir is not None:
                tic = time.perf_counter()
                _snapshot(out_dir, target, config, dom, f, U, setup.gamma, vgrid)
                timings["io"] += time.perf_counter() - tic
        if observer is not None:
            observer(steps, t, dom, f, U)

    dom.project_all(f, U)
    result = RunResult(config=config, setup=setup, dom=dom, f=f, U=U,
                       stats=stats, steps=steps, t=t, timings=timings)
    if out_dir is not None:
        tic = time.perf_counter()
        if not any(abs(s - config.t_end) <= _TIME_EPS for s in config.snapshot_times):
            _snapshot(out_dir, config.t_end, config, dom, f, U, setup.gamma, vgrid)
        io.write_fraction(os.path.join(out_dir, "kinetic_fraction.csv"), stats)
        timings["io"] += time.perf_counter() - tic
    return result


def convergence_timesteps(t_end: float, dt0: float, levels: int):
    """Halving dt ladder whose members divide t_end exactly."""
    steps0 = max(1, round(t_end / dt0))
    return [t_end / (steps0 * 2 ** k) for k in range(levels + 1)]


def run_convergence_study(config: ScenarioConfig, dts=None, modes=("hybrid",),
                          levels: int = 4):
    """Temporal self-convergence table over a halving dt ladder.

    Returns rows (dt, err, order_or_None, mode, epsilon): one row per dt
    except the finest, err comparing the run at dt with the run at dt/2 in
    the discrete L2 norm of the mode's state vector.
    """
    if dts is None:
        dts = convergence_timesteps(config.t_end, 0.0135, levels)
    else:
        # anchor the ladder on the first entry, force exact doubling of the
        # step counts, and only check the remaining entries for proximity
        steps0 = max(1, round(config.t_end / dts[0]))
        snapped = [config.t_end / (steps0 * 2**k) for k in range(len(dts))]
        for given, snap in zip(dts, snapped):
            if not 0.7 * snap <= given <= 1.4 * snap:
                raise ConfigError(
                    f"dt list must roughly halve between entries; {given} "
                    f"does not match the ladder value {snap:.6g}")
        dts = snapped
    rows = []
    for mode in modes:
        cfg = ScenarioConfig(**{**config.to_dict(), "mode": mode,
                                "snapshot_times": (), "probes": ()})
        states = []
        for dt in dts:
            res = run_simulation(cfg, fixed_dt=dt)
            states.append(state_vector(res))
        errors = [float(np.linalg.norm(a - b))
                  for a, b in zip(states, states[1:])]
        orders = [None]
        if len(errors) >= 2:
            orders += richardson_order(errors)
        for dt, err, order in zip(dts[:-1], errors, orders):
            rows.append((dt, err, order, mode, config.epsilon))
    return rows
