"""Fixtures that synthesize run directories in the solver's file formats."""

import json

import numpy as np
import pytest


def fmt(x) -> str:
    """17 significant digits, the solver's float format."""
    return format(float(x), ".17g")


def write_snapshot(path, x, y, rho, ux, uy, T, P, regime):
    ny, nx = rho.shape
    lines = ["i,j,x,y,rho,ux,uy,T,P,regime"]
    for j in range(ny):
        for i in range(nx):
            lines.append(",".join((
                str(i), str(j), fmt(x[i]), fmt(y[j]), fmt(rho[j, i]),
                fmt(ux[j, i]), fmt(uy[j, i]), fmt(T[j, i]), fmt(P[j, i]),
                str(int(regime[j, i])))))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def random_fields(rng, ny, nx):
    """Positive random snapshot fields with full double mantissas."""
    return dict(rho=rng.uniform(0.1, 3.0, (ny, nx)),
                ux=rng.standard_normal((ny, nx)),
                uy=rng.standard_normal((ny, nx)),
                T=rng.uniform(0.2, 2.0, (ny, nx)),
                P=rng.uniform(0.1, 4.0, (ny, nx)))


def cell_centers(n, length=1.0):
    return (np.arange(n) + 0.5) * (length / n)


@pytest.fixture
def rng():
    return np.random.default_rng(518)


@pytest.fixture
def make_run(tmp_path, rng):
    """Factory building a run directory with snapshots and side files.

    ``masks`` maps snapshot times to regime arrays; all snapshots share the
    random field data shape.
    """

    def build(ny=12, nx=10, masks=None, scenario=None, fraction_rows=None):
        run = tmp_path / "run"
        run.mkdir(exist_ok=True)
        masks = masks or {0.1: np.zeros((ny, nx), dtype=int)}
        x, y = cell_centers(nx), cell_centers(ny)
        for t, regime in masks.items():
            f = random_fields(rng, ny, nx)
            write_snapshot(run / f"snapshot_t{t:.6f}.csv", x, y,
                           regime=np.asarray(regime, dtype=int), **f)
        if scenario is not None:
            (run / "manifest.json").write_text(
                json.dumps({"config": {"scenario": scenario}}),
                encoding="utf-8")
        if fraction_rows is not None:
            lines = ["t,fraction,to_kinetic,to_fluid"]
            for t, frac, n2k, n2f in fraction_rows:
                lines.append(f"{fmt(t)},{fmt(frac)},{n2k},{n2f}")
            (run / "kinetic_fraction.csv").write_text(
                "\n".join(lines) + "\n", encoding="utf-8")
        return run

    return build
