"""Experiment drivers: datasets, seeded sweeps, CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DefinitenessError, InputError
from .kernels import eigenvalue_map, kernel_distance, nntk_finite, nntk_limit, ntk_limit_mc, quadratic_form_stderr
from .limit import convergence_report, limit_trajectory
from .linalg import sym_eig
from .model import Activation, InitDistribution, sample_init
from .newton import newton_step_woodbury, train
from .objective import Dataset, residual_and_loss

EXPERIMENTS = ("spectra", "one-step", "z-sweep", "kernel-sweep", "train", "limit")
TARGETS = {"sin5pi": 5.0, "sin20pi": 20.0}

_MASK64 = (1 << 64) - 1
# stream index reserved for the Monte Carlo reference kernel
MC_STREAM = 0xFFFF_FFFF


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def run_seed(seed0: int, r: int) -> int:
    """Seed of run ``r``: ``seed0 XOR splitmix64(r)``, as an unsigned 64-bit int."""
    return (seed0 & _MASK64) ^ splitmix64(r)


def gen_dataset(target: str, M: int) -> Dataset:
    """Midpoint grid on [-1, 1] with labels ``2x + 0.4 sin(omega pi x)``.

    For odd ``M`` the midpoint grid contains 0; the grid is then shifted
    right by a quarter spacing.
    """
    if target not in TARGETS:
        raise InputError(f"unknown target {target!r}; expected one of {sorted(TARGETS)}")
    if M < 1:
        raise InputError(f"M must be >= 1, got {M}")
    m = np.arange(1, M + 1)
    x = -1.0 + (2 * m - 1) / M
    if M % 2 == 1:
        x = x + 0.5 / M
    y = 2 * x + 0.4 * np.sin(TARGETS[target] * np.pi * x)
    return Dataset(x[:, None], y)


def loglog_slope(xs, ys):
    """Least-squares line through ``(ln x, ln y)``; returns ``(slope, intercept, r_squared)``."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 2:
        raise InputError("need at least two (x, y) pairs of equal length")
    if np.any(xs <= 0) or np.any(ys <= 0) or not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise InputError("log-log fit needs finite positive values")
    lx, ly = np.log(xs), np.log(ys)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    ss_res = float(np.sum((ly - A @ [slope, intercept]) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class ExperimentConfig:
    experiment: str
    N_list: list = field(default_factory=lambda: [256, 1024, 4096])
    gamma_list: list = field(default_factory=lambda: [1.0])
    alpha: float = 1.0
    beta: float = 0.52
    M: int = 16
    K: int = 3
    seeds: int = 20
    seed0: int = 0
    mc_samples: int = 200_000
    target: str = "sin20pi"
    out: str | None = None
    activation: str = "tanh"
    c_halfwidth: float = 1.0
    w_eta_std: float = 1.0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.N_list or not self.gamma_list:
            raise InputError("N_list and gamma_list must be nonempty")
        if any(int(n) < 1 for n in self.N_list):
            raise InputError("widths must be >= 1")
        if any(not (math.isfinite(g) and g >= 0) for g in self.gamma_list):
            raise InputError("gammas must be finite and >= 0")
        if self.seeds < 1:
            raise InputError("seeds must be >= 1")
        if not (0.5 < self.beta < 1.0):
            raise InputError(f"beta must lie strictly inside (0.5, 1), got {self.beta}")
        if self.M < 1 or self.K < 0 or self.mc_samples < 1:
            raise InputError("M >= 1, K >= 0 and mc_samples >= 1 are required")
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.target not in TARGETS:
            raise InputError(f"unknown target {self.target!r}")
        Activation.parse(self.activation)
        self.N_list = [int(n) for n in self.N_list]
        self.gamma_list = [float(g) for g in self.gamma_list]

    @property
    def act(self) -> Activation:
        return Activation.parse(self.activation)

    @property
    def dist(self) -> InitDistribution:
        return InitDistribution(self.c_halfwidth, self.w_eta_std)

    def dataset(self) -> Dataset:
        return gen_dataset(self.target, self.M)

    def init(self, N: int, r: int):
        return sample_init(self.dist, N, 1, self.beta, run_seed(self.seed0, r))

    def mc_seed(self) -> int:
        return run_seed(self.seed0, MC_STREAM)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, **values):
        self.rows.append([values.get(c, "") for c in self.columns])

    def column(self, name, **where) -> list:
        j = self.columns.index(name)
        idx = {self.columns.index(k): v for k, v in where.items()}
        return [row[j] for row in self.rows if all(row[i] == v for i, v in idx.items())]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _limit_reference(cfg: ExperimentConfig, data: Dataset):
    return ntk_limit_mc(cfg.dist, cfg.act, data, cfg.mc_samples, cfg.mc_seed())


def _spectra(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()
    B = _limit_reference(cfg, data)
    lam, V = sym_eig(B.mat)
    se = quadratic_form_stderr(cfg.dist, cfg.act, data, V, cfg.mc_samples, cfg.mc_seed())
    cols = ["m", "ntk", "ntk_se"]
    for g in cfg.gamma_list:
        cols += [f"nntk_g{g:g}", f"nntk_se_g{g:g}"]
    table = Table(cols)
    # limit Newton kernel shares B's eigenvectors, so its spectrum is the exact map of B's
    for g in cfg.gamma_list:
        nntk_limit(B, g)
    mapped = {g: eigenvalue_map(lam, g) for g in cfg.gamma_list}
    order = np.argsort(-lam, kind="stable")
    for rank, j in enumerate(order, start=1):
        row = {"m": rank, "ntk": lam[j], "ntk_se": se[j]}
        for g in cfg.gamma_list:
            row[f"nntk_g{g:g}"] = mapped[g][j]
            row[f"nntk_se_g{g:g}"] = g / (g + lam[j]) ** 2 * se[j]
        table.add(**row)
    return table


def _sweep(cfg: ExperimentConfig, value_name: str, cell, gammas=None) -> Table:
    """Evaluate ``cell(N, gamma, r)`` over the grid with guard failures recorded as data."""
    table = Table(["kind", "N", "gamma", "seed", value_name, "failed"])
    for N in cfg.N_list:
        for g in gammas if gammas is not None else cfg.gamma_list:
            values = []
            for r in range(cfg.seeds):
                try:
                    v = cell(N, g, r)
                    table.add(kind="cell", N=N, gamma=g, seed=r, **{value_name: v}, failed=0)
                    values.append(v)
                except DefinitenessError:
                    table.add(kind="cell", N=N, gamma=g, seed=r, **{value_name: math.nan}, failed=1)
            mean = float(np.mean(values)) if values else math.nan
            table.add(kind="mean", N=N, gamma=g, **{value_name: mean}, failed=cfg.seeds - len(values))
    return table


def _one_step(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()
    yy = float(data.ys @ data.ys)

    def cell(N, g, r):
        _, params1 = newton_step_woodbury(cfg.init(N, r), cfg.act, data, g, cfg.alpha)
        return residual_and_loss(params1, cfg.act, data)[1] / yy

    return _sweep(cfg, "rel_loss", cell)


def _z_sweep(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()

    def cell(N, g, r):
        step, _ = newton_step_woodbury(cfg.init(N, r), cfg.act, data, g, cfg.alpha)
        return step.max_block_update

    table = _sweep(cfg, "max_update", cell)
    table.columns += ["intercept", "r_squared"]
    for row in table.rows:
        row += ["", ""]
    for g in cfg.gamma_list:
        Ns = list(cfg.N_list)
        means = [table.column("max_update", kind="mean", N=n, gamma=g)[0] for n in Ns]
        ok = [(n, v) for n, v in zip(Ns, means) if math.isfinite(v) and v > 0]
        if len(ok) >= 2:
            slope, intercept, r2 = loglog_slope(*zip(*ok))
        else:
            slope = intercept = r2 = math.nan
        table.add(kind="slope", gamma=g, max_update=slope, failed=len(Ns) - len(ok),
                  intercept=intercept, r_squared=r2)
    return table


def _kernel_sweep(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()
    B = _limit_reference(cfg, data)
    limits = {g: nntk_limit(B, g) for g in cfg.gamma_list if g > 0}

    def cell(N, g, r):
        return kernel_distance(nntk_finite(cfg.init(N, r), cfg.act, data, g), limits[g])

    return _sweep(cfg, "distance", cell, gammas=[g for g in cfg.gamma_list if g > 0])


def _train(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()
    cols = ["N", "gamma", "seed", "k", "loss", "max_update", "min_block_eig"]
    cols += [f"f{m}" for m in range(1, data.M + 1)]
    table = Table(cols)
    K = max(cfg.K, 1)
    for N in cfg.N_list:
        for g in cfg.gamma_list:
            for r in range(cfg.seeds):
                traj = train(cfg.init(N, r), cfg.act, data, g, cfg.alpha, K)
                for k in range(K + 1):
                    row = {"N": N, "gamma": g, "seed": r, "k": k, "loss": traj.losses[k]}
                    if k < K:
                        row["max_update"] = traj.max_block_updates[k]
                        row["min_block_eig"] = traj.min_block_eigs[k]
                    row.update({f"f{m + 1}": v for m, v in enumerate(traj.outputs[k])})
                    table.add(**row)
    return table


def width_term(N: int, beta: float, M: int) -> float:
    """``sqrt(M) * (N^-(beta-1/2) + N^-(1-beta) + log(M) / sqrt(N))``, the width-dependent rate."""
    return math.sqrt(M) * (N ** -(beta - 0.5) + N ** -(1 - beta) + math.log(M) / math.sqrt(N))


def _limit(cfg: ExperimentConfig) -> Table:
    data = cfg.dataset()
    B = _limit_reference(cfg, data)
    cols = ["N", "gamma", "seed", "k", "limit_residual", "envelope", "finite_residual",
            "finite_vs_limit", "width_term", "rate", "admissible"]
    table = Table(cols)
    for g in cfg.gamma_list:
        Bstar = nntk_limit(B, g)
        lt = limit_trajectory(Bstar, data.ys, cfg.alpha, cfg.K)
        rep = convergence_report(Bstar, cfg.alpha)
        for k in range(cfg.K + 1):
            table.add(N="inf", gamma=g, seed="", k=k, limit_residual=lt.residual_norms[k],
                      envelope=lt.bound[k], rate=rep.rate, admissible=rep.admissible)
        if g == 0 or cfg.K == 0:
            continue
        for N in cfg.N_list:
            wt = width_term(N, cfg.beta, data.M)
            for r in range(cfg.seeds):
                traj = train(cfg.init(N, r), cfg.act, data, g, cfg.alpha, cfg.K)
                for k in range(cfg.K + 1):
                    fk = traj.outputs[k]
                    table.add(N=N, gamma=g, seed=r, k=k, limit_residual=lt.residual_norms[k],
                              envelope=lt.bound[k], finite_residual=float(np.linalg.norm(data.ys - fk)),
                              finite_vs_limit=float(np.linalg.norm(fk - lt.f_star[k])), width_term=wt,
                              rate=rep.rate, admissible=rep.admissible)
    return table


_DRIVERS = {
    "spectra": _spectra,
    "one-step": _one_step,
    "z-sweep": _z_sweep,
    "kernel-sweep": _kernel_sweep,
    "train": _train,
    "limit": _limit,
}


def compute(cfg: ExperimentConfig) -> Table:
    return _DRIVERS[cfg.experiment](cfg)


def render_csv(cfg: ExperimentConfig, table: Table) -> str:
    buf = io.StringIO()
    provenance = {k: v for k, v in asdict(cfg).items() if k != "out"}
    buf.write(f"# nntk {__version__} " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run ``cfg`` and write its CSV; returns the output path."""
    table = compute(cfg)
    path = Path(cfg.out or f"{cfg.experiment}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(cfg, table))
    return path
