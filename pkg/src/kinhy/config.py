"""Run configuration: built-in scenario catalog and TOML config parsing.

Every run is described by a single flat ``ScenarioConfig``.  Built-in
scenarios provide complete defaults (two sizes each: a quick desk scale and
the full published scale); a config file only needs the scenario id, and any
key it does set overrides the catalog value.  Unknown sections or keys are
errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import tomli

from .errors import ConfigError

MODES = ("hybrid", "hybrid_loc", "full_kinetic", "full_euler")

_SECTION_KEYS = {
    "scenario": ("scenario", "mode", "seed", "paper_scale", "freeze_mask"),
    "grid": ("nx", "ny", "lx", "ly", "ox", "oy", "bc_x", "bc_y",
             "obstacle_shape", "obstacle_x", "obstacle_y", "obstacle_radius",
             "obstacle_width", "obstacle_height"),
    "velocity": ("nv", "vmax"),
    "physics": ("epsilon", "beta", "tau_model", "constants_dim"),
    "thresholds": ("eta", "delta", "buffer_width"),
    "time": ("cfl", "t_end", "dt"),
    "output": ("out_dir", "snapshot_times", "probes"),
}

_GLOBAL_DEFAULTS = dict(
    mode="hybrid",
    seed=1234,
    paper_scale=False,
    freeze_mask=False,
    ox=0.0,
    oy=0.0,
    bc_x="periodic",
    bc_y="periodic",
    obstacle_shape="none",
    obstacle_x=0.0,
    obstacle_y=0.0,
    obstacle_radius=0.0,
    obstacle_width=0.0,
    obstacle_height=0.0,
    beta=-0.5,
    tau_model="density",
    constants_dim=2,
    delta=1e-3,
    buffer_width=2,
    dt=0.0,
    out_dir="out",
    snapshot_times=(),
    probes=(),
)

# Per-scenario defaults.  "eta_factor" ties the switching threshold to the
# resolved stiffness parameter unless the config names eta explicitly.
_CATALOG = {
    "gaussian_order": dict(
        desk=dict(nx=45, ny=45, nv=16), paper=dict(nx=90, ny=90, nv=32),
        lx=6.0, ly=6.0, vmax=5.0, epsilon=1e-6, eta=1e-3,
        cfl=0.5, t_end=0.86, bc_x="periodic", bc_y="periodic",
        freeze_mask=True,
    ),
    "sod": dict(
        desk=dict(nx=21, ny=150, nv=24), paper=dict(nx=21, ny=150, nv=32),
        lx=0.1, ly=1.0, vmax=8.0, epsilon=1e-6, eta_factor=1.0,
        cfl=0.8, t_end=0.15, bc_x="periodic", bc_y="zero_gradient",
        snapshot_times=(0.05, 0.10, 0.15),
    ),
    "kelvin_helmholtz": dict(
        desk=dict(nx=75, ny=38, nv=16), paper=dict(nx=150, ny=75, nv=32),
        lx=1.0, ly=0.5, vmax=8.0, epsilon=1e-6, eta_factor=4.0,
        cfl=0.5, t_end=1.7, bc_x="periodic", bc_y="zero_gradient",
    ),
    "shock_bubble": dict(
        desk=dict(nx=75, ny=25, nv=20), paper=dict(nx=150, ny=50, nv=32),
        lx=5.0, ly=1.0, ox=-2.0, oy=-0.5, vmax=8.0, epsilon=1e-6,
        eta_factor=0.5, cfl=0.5, t_end=1.5,
        bc_x="zero_gradient", bc_y="zero_gradient",
    ),
    "cylinder": dict(
        desk=dict(nx=78, ny=78, nv=24), paper=dict(nx=78, ny=78, nv=32),
        lx=1.0, ly=1.0, vmax=8.0, epsilon=1e-6, eta_factor=10.0,
        cfl=0.5, t_end=0.15, bc_x="zero_gradient", bc_y="zero_gradient",
        obstacle_shape="circle", obstacle_x=0.4, obstacle_y=0.5,
        obstacle_radius=1.0 / 12.0,
    ),
    "rectangle": dict(
        desk=dict(nx=78, ny=78, nv=24), paper=dict(nx=78, ny=78, nv=32),
        lx=1.0, ly=1.0, vmax=8.0, epsilon=1e-6, eta_factor=10.0,
        cfl=0.5, t_end=0.15, bc_x="zero_gradient", bc_y="zero_gradient",
        obstacle_shape="rectangle", obstacle_x=0.4, obstacle_y=0.5,
        obstacle_width=None, obstacle_height=None,  # 10 dx by 4 dy, resolved late
    ),
}

SCENARIOS = tuple(_CATALOG)


@dataclass
class ScenarioConfig:
    """Fully resolved run description."""

    scenario: str
    mode: str
    seed: int
    paper_scale: bool
    freeze_mask: bool
    nx: int
    ny: int
    lx: float
    ly: float
    ox: float
    oy: float
    bc_x: str
    bc_y: str
    obstacle_shape: str
    obstacle_x: float
    obstacle_y: float
    obstacle_radius: float
    obstacle_width: float
    obstacle_height: float
    nv: int
    vmax: float
    epsilon: float
    beta: float
    tau_model: str
    constants_dim: int
    eta: float
    delta: float
    buffer_width: int
    cfl: float
    t_end: float
    dt: float
    out_dir: str
    snapshot_times: tuple = field(default_factory=tuple)
    probes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        d["probes"] = [list(p) for p in self.probes]
        return d


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    def require(cond, msg):
        if not cond:
            raise ConfigError(msg)

    require(cfg.scenario in _CATALOG, f"unknown scenario {cfg.scenario!r}")
    require(cfg.mode in MODES, f"mode must be one of {MODES}, got {cfg.mode!r}")
    require(cfg.nx >= 5 and cfg.ny >= 5, "nx and ny must be at least 5")
    require(cfg.lx > 0 and cfg.ly > 0, "lx and ly must be positive")
    require(cfg.nv >= 4 and cfg.nv % 2 == 0, "nv must be an even number >= 4")
    require(cfg.vmax > 0, "vmax must be positive")
    require(cfg.epsilon >= 0, "epsilon must be non-negative")
    require(cfg.beta < 1.0, "beta must be below 1")
    require(cfg.tau_model in ("density", "constant"),
            f"unknown tau_model {cfg.tau_model!r}")
    require(cfg.constants_dim in (2, 3), "constants_dim must be 2 or 3")
    require(cfg.eta > 0, "eta must be positive")
    require(cfg.delta > 0, "delta must be positive")
    require(cfg.buffer_width >= 2, "buffer_width must be at least 2")
    require(0 < cfg.cfl <= 1, "cfl must lie in (0, 1]")
    require(cfg.t_end > 0, "t_end must be positive")
    require(cfg.dt >= 0, "dt must be non-negative (0 selects the CFL rule)")
    require(cfg.bc_x in ("periodic", "zero_gradient"),
            f"unknown bc_x {cfg.bc_x!r}")
    require(cfg.bc_y in ("periodic", "zero_gradient"),
            f"unknown bc_y {cfg.bc_y!r}")
    require(cfg.obstacle_shape in ("none", "circle", "rectangle"),
            f"unknown obstacle_shape {cfg.obstacle_shape!r}")
    times = tuple(float(t) for t in cfg.snapshot_times)
    require(all(0.0 < t <= cfg.t_end + 1e-12 for t in times),
            "snapshot_times must lie in (0, t_end]")
    require(list(times) == sorted(times), "snapshot_times must be ascending")
    cfg.snapshot_times = times
    probes = tuple((int(i), int(j)) for i, j in cfg.probes)
    require(all(0 <= i < cfg.nx and 0 <= j < cfg.ny for i, j in probes),
            "probes must be (i, j) cell indices inside the grid")
    cfg.probes = probes
    return cfg


def make_config(scenario: str, paper_scale: bool = False, **overrides) -> ScenarioConfig:
    """Resolve a scenario's defaults, then apply keyword overrides."""
    if scenario not in _CATALOG:
        raise ConfigError(f"unknown scenario {scenario!r}")
    row = _CATALOG[scenario]
    values = dict(_GLOBAL_DEFAULTS)
    values.update({k: v for k, v in row.items() if k not in ("desk", "paper", "eta_factor")})
    values.update(row["paper" if paper_scale else "desk"])
    values["scenario"] = scenario
    values["paper_scale"] = paper_scale
    eta_explicit = "eta" in overrides or "eta" in row
    values.update(overrides)
    if not eta_explicit:
        values["eta"] = row.get("eta_factor", 1.0) * values["epsilon"]
    if values.get("obstacle_width") is None:
        values["obstacle_width"] = 10.0 * values["lx"] / values["nx"]
    if values.get("obstacle_height") is None:
        values["obstacle_height"] = 4.0 * values["ly"] / values["ny"]
    unknown = set(values) - {f for keys in _SECTION_KEYS.values() for f in keys}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return _validate(ScenarioConfig(**values))


def parse_overrides(text: str):
    """Parse a TOML config into ``(scenario, paper_scale, overrides)``.

    The file is organized in the sections listed in ``_SECTION_KEYS``; the
    only required key is ``scenario.scenario``.  Unknown sections or keys
    raise, naming the offender.  The overrides dict holds exactly the keys
    the file sets, so callers may layer further overrides on top before
    resolving with :func:`make_config`.
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    flat = {}
    for section, content in data.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"top-level key {section!r} must be a section")
        for key, value in content.items():
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]")
            flat[key] = value
    if "scenario" not in flat:
        raise ConfigError("config must name a scenario in [scenario]")
    scenario = flat.pop("scenario")
    paper_scale = bool(flat.pop("paper_scale", False))
    if "snapshot_times" in flat:
        flat["snapshot_times"] = tuple(flat["snapshot_times"])
    if "probes" in flat:
        flat["probes"] = tuple(tuple(p) for p in flat["probes"])
    return scenario, paper_scale, flat


def parse_config(text: str) -> ScenarioConfig:
    """Parse a TOML config into a fully resolved ScenarioConfig."""
    scenario, paper_scale, flat = parse_overrides(text)
    return make_config(scenario, paper_scale=paper_scale, **flat)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_config(text)
