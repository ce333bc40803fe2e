"""Seeded, parallel Monte Carlo experiments over grids of data-generating designs.

Every replication seed is derived by hashing the base seed together with the
cell coordinates and the replication index, so results are identical for any
worker count and any grid composition. The framework coordinate is excluded
from the hash: MP and PANIC cells that agree otherwise consume identical
draws, which makes the two setups literally coincide under the null and
keeps their power comparison free of simulation noise.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .asymptotics import local_power_mp_bn, power_envelope
from .dgp import DgpConfig, InnovationSpec, simulate
from .errors import DataError
from .factors import estimate_factors, select_num_factors
from .lrv import LrvConfig, estimate_lrv_set
from .panel import difference
from .statistics import TEST_NAMES, bn_tests, mp_tests, precision_matrix, t_ump, t_ump_emp

__all__ = ["Experiment", "ResultRow", "run", "power_figure_data", "replication_seed",
           "WORKERS_ENV_VAR", "RESULT_COLUMNS"]

WORKERS_ENV_VAR = "PANELUR_WORKERS"

RESULT_COLUMNS = ("framework", "n", "T", "ratio", "innovation", "distribution",
                  "bandwidth", "kernel", "prewhiten", "h", "test",
                  "rejection_rate", "mc_std_err", "replications", "errors")


@dataclass(frozen=True)
class Experiment:
    """A grid of simulation designs plus the estimation configuration."""

    frameworks: tuple = ("PANIC",)
    sizes: tuple = ((50, 100),)
    ratios: tuple = (1.0,)
    innovations: tuple = ("iid",)
    distributions: tuple = ("gaussian",)
    h_values: tuple = (0.0,)
    k: int = 1
    k_known: bool = True
    k_max: int = 6
    innovation_parameter: float = 0.4
    heterogeneous_alternatives: bool = False
    panic_stationary_factors: bool = False
    lrv_cfg: LrvConfig = field(default_factory=LrvConfig)
    tests: tuple = TEST_NAMES
    alpha: float = 0.05
    replications: int = 100
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frameworks", tuple(self.frameworks))
        object.__setattr__(self, "sizes", tuple(tuple(s) for s in self.sizes))
        object.__setattr__(self, "ratios", tuple(self.ratios))
        object.__setattr__(self, "innovations", tuple(self.innovations))
        object.__setattr__(self, "distributions", tuple(self.distributions))
        object.__setattr__(self, "h_values", tuple(self.h_values))
        object.__setattr__(self, "tests", tuple(self.tests))
        if self.replications < 1:
            raise DataError("need at least one replication")
        for grid in ("frameworks", "sizes", "ratios", "innovations",
                     "distributions", "h_values", "tests"):
            if not getattr(self, grid):
                raise DataError(f"experiment grid {grid!r} is empty")
        unknown = set(self.tests) - set(TEST_NAMES)
        if unknown:
            raise DataError(f"unknown test names: {sorted(unknown)}")

    def cells(self) -> list[tuple]:
        return [
            (fw, n, t, ratio, innov, dist, h)
            for fw in self.frameworks
            for (n, t) in self.sizes
            for ratio in self.ratios
            for innov in self.innovations
            for dist in self.distributions
            for h in self.h_values
        ]


@dataclass(frozen=True)
class ResultRow:
    """Rejection frequency of one test in one grid cell."""

    framework: str
    n: int
    T: int
    ratio: float
    innovation: str
    distribution: str
    bandwidth: str
    kernel: str
    prewhiten: bool
    h: float
    test: str
    rejection_rate: float
    mc_std_err: float
    replications: int
    errors: int

    def as_dict(self) -> dict:
        return asdict(self)


def replication_seed(base_seed: int, n: int, t: int, ratio: float, innovation: str,
                     distribution: str, h: float, rep: int) -> int:
    """Stable 64-bit replication seed; independent of framework and scheduling."""
    key = f"{base_seed}|{n}|{t}|{ratio!r}|{innovation}|{distribution}|{h!r}|{rep}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def _cell_config(exp: Experiment, cell: tuple, rep: int) -> DgpConfig:
    fw, n, t, ratio, innov, dist, h = cell
    seed = replication_seed(exp.base_seed, n, t, ratio, innov, dist, h, rep)
    return DgpConfig(
        framework=fw,
        n=n,
        T=t,
        h=h,
        K=exp.k,
        factor_spec=InnovationSpec(kind=innov, parameter=exp.innovation_parameter,
                                   distribution=dist, target_lrv=1.0),
        idio_spec=InnovationSpec(kind=innov, parameter=exp.innovation_parameter,
                                 distribution=dist, target_lrv=1.0),
        lrv_ratio=ratio,
        heterogeneous_alternatives=exp.heterogeneous_alternatives,
        panic_stationary_factors=exp.panic_stationary_factors,
        seed=seed,
    )


def run_single(exp: Experiment, cell: tuple, rep: int) -> dict[str, bool]:
    """One full pipeline pass: simulate, fit factors, estimate LRVs, test.

    Returns rejection flags per requested test.
    """
    sim = simulate(_cell_config(exp, cell, rep))
    d = difference(sim.panel)
    if exp.k_known:
        k = exp.k
    else:
        k = select_num_factors(d, min(exp.k_max, min(d.values.shape)))
    fit = estimate_factors(d, k)
    lrvs = estimate_lrv_set(fit.residuals, exp.lrv_cfg)
    out: dict[str, bool] = {}
    wanted = set(exp.tests)
    if wanted & {"t_ump", "t_ump_emp"}:
        psi = precision_matrix(lrvs, fit.loadings_hat if k > 0 else None)
        if "t_ump" in wanted:
            out["t_ump"] = t_ump(d, psi, lrvs, exp.alpha).reject
        if "t_ump_emp" in wanted:
            out["t_ump_emp"] = t_ump_emp(d, psi, lrvs, exp.alpha).reject
    if wanted & {"p_a", "p_b"}:
        p_a, p_b = bn_tests(fit, lrvs, exp.alpha)
        if "p_a" in wanted:
            out["p_a"] = p_a.reject
        if "p_b" in wanted:
            out["p_b"] = p_b.reject
    if wanted & {"t_a", "t_b"}:
        t_a, t_b = mp_tests(sim.panel, fit.loadings_hat if k > 0 else None, lrvs, exp.alpha)
        if "t_a" in wanted:
            out["t_a"] = t_a.reject
        if "t_b" in wanted:
            out["t_b"] = t_b.reject
    return out


def _run_chunk(exp: Experiment, cell: tuple, rep_start: int, rep_stop: int):
    """Rejection and error counts over a contiguous replication range."""
    counts = {name: 0 for name in exp.tests}
    successes = 0
    errors = 0
    for rep in range(rep_start, rep_stop):
        try:
            flags = run_single(exp, cell, rep)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError):
            errors += 1
            continue
        successes += 1
        for name, rejected in flags.items():
            counts[name] += int(rejected)
    return cell, counts, successes, errors


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run(exp: Experiment, workers: int | None = None) -> list[ResultRow]:
    """Execute the full grid; deterministic for a fixed experiment, any worker count."""
    cells = exp.cells()
    n_workers = _worker_count(workers)
    chunk = max(1, min(500, exp.replications // max(1, n_workers * 4) + 1))
    tasks = [
        (cell, start, min(start + chunk, exp.replications))
        for cell in cells
        for start in range(0, exp.replications, chunk)
    ]
    results = {cell: ({name: 0 for name in exp.tests}, 0, 0) for cell in cells}

    def fold(cell, counts, successes, errors):
        agg, succ, err = results[cell]
        for name, c in counts.items():
            agg[name] += c
        results[cell] = (agg, succ + successes, err + errors)

    if n_workers == 1 or len(tasks) == 1:
        for cell, start, stop in tasks:
            fold(*_run_chunk(exp, cell, start, stop))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_run_chunk, exp, cell, start, stop)
                       for cell, start, stop in tasks]
            for fut in futures:
                fold(*fut.result())

    rows: list[ResultRow] = []
    for cell in cells:
        fw, n, t, ratio, innov, dist, h = cell
        agg, successes, errors = results[cell]
        for name in exp.tests:
            rate = agg[name] / successes if successes else float("nan")
            se = (np.sqrt(rate * (1.0 - rate) / successes) if successes else float("nan"))
            rows.append(ResultRow(
                framework=fw, n=n, T=t, ratio=ratio, innovation=innov,
                distribution=dist, bandwidth=exp.lrv_cfg.bandwidth,
                kernel=exp.lrv_cfg.kernel, prewhiten=exp.lrv_cfg.prewhiten,
                h=h, test=name, rejection_rate=float(rate), mc_std_err=float(se),
                replications=successes, errors=errors,
            ))
    return rows


def power_figure_data(exp: Experiment, workers: int | None = None) -> list[dict]:
    """Empirical power rows joined with the analytic envelope and MP/BN asymptote."""
    if 0.0 not in exp.h_values:
        raise DataError("power figure experiments must include h = 0")
    rows = run(exp, workers=workers)
    out = []
    for row in rows:
        rec = row.as_dict()
        h_abs = abs(row.h)
        rec["h_abs"] = h_abs
        rec["envelope"] = power_envelope(exp.alpha, h_abs)
        rec["mp_bn_asymptote"] = local_power_mp_bn(exp.alpha, h_abs, row.ratio)
        out.append(rec)
    return out
