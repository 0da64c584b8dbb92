"""Experiment orchestration: configs, runs, CSV emission, plot scripts.

Experiments are driven by a flat key/value config; every run is a pure
function of the config and its seeds, so identical configs produce
identical CSV files up to the runtime column, regardless of the worker
count.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bounds, constructions
from .analysis import effective_pkl_mu, path_length_discrete, path_length_quadratic_gf
from .errors import InputError, InvariantViolation
from .optimizers import StopRule, gd_run
from .properties import run_property_suite  # noqa: F401  (re-exported)

EXPERIMENTS = (
    "pkl-lower-gd", "quad-lower-gf", "quad-lower-gd",
    "quad-random", "bound-sweep", "property-suite",
)

CSV_HEADER = (
    "experiment,d,omega,kappa_nominal,kappa_effective,mu_mode,dist0,zeta,"
    "ratio,bound_upper,bound_lower,steps,runtime_s,seed,stop_reason"
)

#: Relative slack granted to the bound sandwich (quadrature error).
SANDWICH_SLACK = 1e-9


def f1_dimension_grid(low: float = math.e**2, high: float = math.e**5, count: int = 15) -> tuple[int, ...]:
    """Log-spaced integer dimensions inside [low, high] (deduplicated)."""
    if not (6 <= low < high) or count < 1:
        raise InputError("need 6 <= low < high and count >= 1")
    lo, hi = math.ceil(low), math.floor(high)
    points = np.exp(np.linspace(math.log(low), math.log(high), count))
    dims = sorted({min(hi, max(lo, int(round(p)))) for p in points})
    return tuple(dims)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dims: tuple[int, ...] = ()
    omegas: tuple[float, ...] = ()
    kappas: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0,)
    mu_mode: str = "min"
    quad_abs_tol: float = 1e-12
    ode_tol: float = 1e-10
    stop_norm: float = 1e-6
    stop_coords: float = 1e-2
    safety_cap: int = 5_000_000
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"unknown experiment {self.experiment!r}; known: {', '.join(EXPERIMENTS)}")
        if self.mu_mode not in ("min", "paper_max"):
            raise InputError(f"unknown mu_mode {self.mu_mode!r}")
        for name in ("quad_abs_tol", "ode_tol", "stop_norm", "stop_coords"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.workers < 1 or self.safety_cap < 1:
            raise InputError("workers and safety_cap must be positive")

    def grid_nonempty(self) -> bool:
        if self.experiment == "pkl-lower-gd":
            return bool(self.dims)
        if self.experiment in ("quad-lower-gf", "quad-lower-gd", "bound-sweep"):
            return bool(self.dims) and bool(self.omegas)
        if self.experiment == "quad-random":
            return bool(self.dims) and bool(self.kappas) and bool(self.seeds)
        return True


def default_config(experiment: str) -> ExperimentConfig:
    if experiment == "pkl-lower-gd":
        return ExperimentConfig(experiment, dims=f1_dimension_grid())
    if experiment == "quad-lower-gf":
        return ExperimentConfig(experiment, dims=(20,), omegas=(1.1, 1.3, 1.6, 2.0))
    if experiment == "quad-lower-gd":
        return ExperimentConfig(experiment, dims=(6,), omegas=(11.0,))
    if experiment == "quad-random":
        return ExperimentConfig(experiment, dims=(20,), kappas=(1e6,), seeds=tuple(range(10)))
    if experiment == "bound-sweep":
        return ExperimentConfig(experiment, dims=(6, 20, 150), omegas=(1.1, 2.0, 11.0))
    if experiment == "property-suite":
        return ExperimentConfig(experiment, dims=(6, 20))
    raise InputError(f"unknown experiment {experiment!r}; known: {', '.join(EXPERIMENTS)}")


_LIST_KEYS = {"dims", "omegas", "kappas", "seeds"}
_INT_KEYS = {"workers", "safety_cap"}
_FLOAT_KEYS = {"quad_abs_tol", "ode_tol", "stop_norm", "stop_coords"}
_STR_KEYS = {"experiment", "mu_mode", "out"}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (unknown keys are errors)."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, eq, value = stripped.partition("=")
        if not eq:
            raise InputError(f"config line {lineno}: expected 'key = value', got {stripped!r}")
        key, value = key.strip(), value.strip()
        if key in _LIST_KEYS:
            items = [v for v in (s.strip() for s in value.split(",")) if v]
            caster = int if key in ("dims", "seeds") else float
            raw[key] = tuple(caster(v) for v in items)
        elif key in _INT_KEYS:
            raw[key] = int(value)
        elif key in _FLOAT_KEYS:
            raw[key] = float(value)
        elif key in _STR_KEYS:
            raw[key] = value
        else:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
    if "experiment" not in raw:
        raise InputError("config must set 'experiment'")
    cfg = default_config(raw.pop("experiment"))
    return replace(cfg, **raw)


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# Result rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    d: int
    omega: float | None
    kappa_nominal: float
    kappa_effective: float | None
    mu_mode: str
    dist0: float
    zeta: float | None
    ratio: float | None
    bound_upper: float | None
    bound_lower: float | None
    steps: int
    runtime_s: float
    seed: int | None
    stop_reason: str

    def sort_key(self):
        return (
            self.experiment,
            self.d,
            self.omega if self.omega is not None else float("-inf"),
            self.seed if self.seed is not None else -1,
        )

    def csv_fields(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [
            self.experiment, fmt(self.d), fmt(self.omega), fmt(self.kappa_nominal),
            fmt(self.kappa_effective), self.mu_mode, fmt(self.dist0), fmt(self.zeta),
            fmt(self.ratio), fmt(self.bound_upper), fmt(self.bound_lower),
            fmt(self.steps), fmt(self.runtime_s), fmt(self.seed), self.stop_reason,
        ]


def _verify_sandwich(row: ResultRow):
    """Construction rows must satisfy bound_lower <= ratio <= bound_upper."""
    if row.stop_reason == "cap" or row.ratio is None:
        return
    if row.bound_lower is not None and row.ratio < row.bound_lower * (1 - SANDWICH_SLACK):
        raise InvariantViolation(
            f"{row.experiment} d={row.d} omega={row.omega}: "
            f"ratio {row.ratio!r} below lower bound {row.bound_lower!r}"
        )
    if row.bound_upper is not None and row.ratio > row.bound_upper * (1 + SANDWICH_SLACK):
        raise InvariantViolation(
            f"{row.experiment} d={row.d} omega={row.omega}: "
            f"ratio {row.ratio!r} above upper bound {row.bound_upper!r}"
        )


def _parallel(points, worker, n_workers: int):
    if n_workers <= 1:
        return [worker(p) for p in points]
    with concurrent.futures.ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, points))


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


def _pkl_point(d: int, cfg: ExperimentConfig) -> ResultRow:
    start = time.perf_counter()
    inst = constructions.build_pkl_gd_instance(d)
    traj = gd_run(
        inst.objective, inst.x0, inst.eta,
        StopRule.norm_below(cfg.stop_norm), safety_cap=cfg.safety_cap,
    )
    rep = path_length_discrete(traj, inst.objective.optimal_set)
    mu_eff = effective_pkl_mu(traj, inst.objective, mode=cfg.mu_mode)
    kappa_nom = 3.0 * d * d
    # the instance's own guarantee is the dimension branch of the PL
    # lower bound; the kappa branch only enters via dimension reduction
    lower = math.sqrt(d) / (16.0 * math.log(d))
    return ResultRow(
        experiment=cfg.experiment, d=d, omega=None,
        kappa_nominal=kappa_nom,
        kappa_effective=inst.objective.L / mu_eff,
        mu_mode=cfg.mu_mode,
        dist0=rep.dist0, zeta=rep.length, ratio=rep.ratio,
        bound_upper=bounds.bound_pkl(inst.objective.mu, inst.objective.L, "gd"),
        bound_lower=lower,
        steps=traj.n_steps, runtime_s=time.perf_counter() - start,
        seed=None, stop_reason=traj.stop_reason,
    )


def run_pkl_lower_gd(cfg: ExperimentConfig) -> list[ResultRow]:
    """Descent path-length ratios of the PL lower-bound instance per dimension."""
    rows = _parallel(cfg.dims, lambda d: _pkl_point(d, cfg), cfg.workers)
    rows.sort(key=ResultRow.sort_key)
    for row in rows:
        _verify_sandwich(row)
    return rows


def _projected_gd_steps(c: constructions.QuadLowerConstruction, stop_coords: float) -> int:
    """A priori step estimate for the geometric-spectrum descent run."""
    if c.d < 2:
        return 0
    slowest_checked = float(c.spectrum[-2])
    rate = -math.log1p(-c.eta * slowest_checked)
    return int(math.ceil(math.log(1.0 / stop_coords) / rate))


def _quad_point(point, cfg: ExperimentConfig) -> ResultRow:
    d, omega = point
    start = time.perf_counter()
    c = constructions.build_quad_lower(d, omega)
    spec = c.to_quadratic()
    kappa = c.kappa
    upper = bounds.bound_quadratic(spec, "gf" if cfg.experiment == "quad-lower-gf" else "gd")
    lower = None
    if kappa >= 5:
        lower = bounds.lower_bound_quadratic(
            d, kappa, "gf" if cfg.experiment == "quad-lower-gf" else "gd"
        )
    if cfg.experiment == "quad-lower-gf":
        rep = path_length_quadratic_gf(spec, cfg.quad_abs_tol)
        steps, stop_reason = rep.steps, rep.stop_reason
        zeta, ratio = rep.length, rep.ratio
    else:
        if _projected_gd_steps(c, cfg.stop_coords) > cfg.safety_cap:
            return ResultRow(
                experiment=cfg.experiment, d=d, omega=omega, kappa_nominal=kappa,
                kappa_effective=spec.kappa, mu_mode="", dist0=c.dist0,
                zeta=None, ratio=None, bound_upper=upper, bound_lower=lower,
                steps=0, runtime_s=time.perf_counter() - start, seed=None,
                stop_reason="cap",
            )
        traj = gd_run(
            c.to_objective(), c.x0, c.eta,
            StopRule.coords_below_except_last(cfg.stop_coords),
            safety_cap=cfg.safety_cap,
        )
        rep = path_length_discrete(traj, spec.optimal_set())
        steps, stop_reason = traj.n_steps, traj.stop_reason
        zeta, ratio = rep.length, rep.ratio
    return ResultRow(
        experiment=cfg.experiment, d=d, omega=omega, kappa_nominal=kappa,
        kappa_effective=spec.kappa, mu_mode="", dist0=c.dist0,
        zeta=zeta, ratio=ratio, bound_upper=upper, bound_lower=lower,
        steps=steps, runtime_s=time.perf_counter() - start, seed=None,
        stop_reason=stop_reason,
    )


def run_quad_lower(cfg: ExperimentConfig) -> list[ResultRow]:
    """Flow or descent ratios of the geometric-spectrum construction."""
    points = [(d, omega) for d in cfg.dims for omega in cfg.omegas]
    rows = _parallel(points, lambda p: _quad_point(p, cfg), cfg.workers)
    rows.sort(key=ResultRow.sort_key)
    for row in rows:
        _verify_sandwich(row)
    return rows


def _random_point(point, cfg: ExperimentConfig) -> ResultRow:
    d, kappa, seed = point
    start = time.perf_counter()
    inst = constructions.build_quad_random(d, kappa, seed)
    spec = inst.to_quadratic()
    rep = path_length_quadratic_gf(spec, cfg.quad_abs_tol)
    return ResultRow(
        experiment=cfg.experiment, d=d, omega=None, kappa_nominal=kappa,
        kappa_effective=spec.kappa, mu_mode="", dist0=rep.dist0,
        zeta=rep.length, ratio=rep.ratio,
        bound_upper=bounds.bound_quadratic(spec, "gf"),
        bound_lower=None,  # the worst-case lower bound does not apply to random spectra
        steps=rep.steps, runtime_s=time.perf_counter() - start,
        seed=seed, stop_reason=rep.stop_reason,
    )


def run_quad_random(cfg: ExperimentConfig) -> list[ResultRow]:
    """Flow ratios of seeded random-spectrum quadratics (comparison set)."""
    points = [(d, k, s) for d in cfg.dims for k in cfg.kappas for s in cfg.seeds]
    rows = _parallel(points, lambda p: _random_point(p, cfg), cfg.workers)
    rows.sort(key=ResultRow.sort_key)
    for row in rows:
        _verify_sandwich(row)
    return rows


def run_bound_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """Bound values over a (d, omega) grid without any simulation."""
    rows = []
    for d in cfg.dims:
        for omega in cfg.omegas:
            start = time.perf_counter()
            c = constructions.build_quad_lower(d, omega)
            spec = c.to_quadratic()
            kappa = c.kappa
            lower = bounds.lower_bound_quadratic(d, kappa, "gf") if kappa >= 5 else None
            rows.append(ResultRow(
                experiment=cfg.experiment, d=d, omega=omega, kappa_nominal=kappa,
                kappa_effective=None, mu_mode="", dist0=c.dist0,
                zeta=None, ratio=None,
                bound_upper=bounds.bound_quadratic(spec, "gf"),
                bound_lower=lower, steps=0,
                runtime_s=time.perf_counter() - start, seed=None, stop_reason="",
            ))
    rows.sort(key=ResultRow.sort_key)
    return rows


def run_experiment(cfg: ExperimentConfig):
    if not cfg.grid_nonempty():
        raise InputError(f"experiment {cfg.experiment!r} has an empty grid")
    if cfg.experiment == "pkl-lower-gd":
        return run_pkl_lower_gd(cfg)
    if cfg.experiment in ("quad-lower-gf", "quad-lower-gd"):
        return run_quad_lower(cfg)
    if cfg.experiment == "quad-random":
        return run_quad_random(cfg)
    if cfg.experiment == "bound-sweep":
        return run_bound_sweep(cfg)
    return run_property_suite(cfg)


# ---------------------------------------------------------------------------
# CSV and plot-script emission
# ---------------------------------------------------------------------------


def render_csv(rows) -> str:
    lines = [CSV_HEADER]
    lines.extend(",".join(row.csv_fields()) for row in rows)
    return "\n".join(lines) + "\n"


def emit_csv(rows, path) -> str:
    text = render_csv(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return text


PLOT_FIGURES = ("f1-ratio-vs-kappa", "f2-ratio-vs-logkappa")

_PLOT_TEMPLATE = '''\
#!/usr/bin/env python3
"""Standalone plot script generated by gradpath ({figure})."""
import csv
import math

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}

rows = []
with open(CSV_PATH) as fh:
    for record in csv.DictReader(fh):
        rows.append(record)

{body}
plt.legend()
plt.tight_layout()
plt.savefig({out_png!r}, dpi=150)
print("wrote", {out_png!r})
'''

_F1_BODY = '''\
xs = [float(r["kappa_effective"]) for r in rows if r["ratio"]]
ys = [float(r["ratio"]) for r in rows if r["ratio"]]
plt.figure(figsize=(6, 4))
if xs:
    plt.plot(xs, ys, "o", label="measured ratio")
lo = min(xs) if xs else 10.0
hi = max(xs) if xs else 1e7
ref_x = [lo * (hi / lo) ** (i / 200) for i in range(201)]
ref_y = [3.0 * k ** 0.25 / math.log(k) for k in ref_x]
plt.plot(ref_x, ref_y, "-", label="3 k^(1/4) / log k")
plt.xscale("log")
plt.xlabel("effective condition number")
plt.ylabel("path length ratio")
'''

_F2_BODY = '''\
xs = [math.log(float(r["kappa_nominal"])) for r in rows if r["ratio"]]
ys = [float(r["ratio"]) for r in rows if r["ratio"]]
DIM = {dim}
plt.figure(figsize=(6, 4))
if xs:
    plt.plot(xs, ys, "o", label="measured ratio")
lo = min(xs) if xs else 1.0
hi = max(xs) if xs else 30.0
ref_x = [lo + (hi - lo) * i / 200 for i in range(201)]
plt.plot(ref_x, [1 + 2.5 * math.sqrt(v) for v in ref_x], "-", label="upper bound")
lower = [0.45 * math.sqrt(v) for v in ref_x]
if DIM is not None:
    lower = [min(v, 0.7 * math.sqrt(DIM)) for v in lower]
plt.plot(ref_x, lower, "--", label="lower bound")
plt.xlabel("log condition number")
plt.ylabel("path length ratio")
'''


def render_plot_script(rows, figure: str, csv_path: str) -> str:
    if figure not in PLOT_FIGURES:
        raise InputError(f"unknown figure {figure!r}; known: {', '.join(PLOT_FIGURES)}")
    out_png = str(Path(csv_path).with_suffix(".png"))
    if figure == "f1-ratio-vs-kappa":
        body = _F1_BODY
    else:
        dims = sorted({row.d for row in rows})
        dim = dims[0] if len(dims) == 1 else None
        body = _F2_BODY.format(dim=dim)
    return _PLOT_TEMPLATE.format(figure=figure, csv_path=str(csv_path), body=body, out_png=out_png)


def emit_plot_script(rows, figure: str, csv_path, out_path) -> str:
    text = render_plot_script(rows, figure, str(csv_path))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(text)
    return text
