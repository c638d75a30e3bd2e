"""Benchmark harness: fit each family to random targets and score the result.

For every (dimension, difficulty, matrix) cell a feasible cross-moment
matrix is generated, each requested family is fitted to it, the family's
achieved moment matrix is computed (exactly where enumeration or closed
forms permit, by Monte Carlo otherwise) and the normalized improvement
over the independence baseline is recorded.  Seeding is derived per
matrix from the base seed and the cell indices, so results are
bit-reproducible and independent of worker scheduling.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conditionals import ConditionalsFamily
from .fitting import FitConfig, fit, fit_linear
from .gaussian import fit_gc
from .links import LOGISTIC
from .matgen import GenConfig, random_cross_moment_matrix
from .moments import independence_moments

FAMILY_LOGISTIC = "logistic"
FAMILY_LINEAR = "truncated-linear"
FAMILY_GAUSSIAN = "gaussian-copula"
KNOWN_FAMILIES = (FAMILY_LOGISTIC, FAMILY_LINEAR, FAMILY_GAUSSIAN)

CSV_HEADER = ("d", "rho", "family", "matrix_index", "tau", "lambda_min", "repaired", "seed")


class DegenerateTargetError(ValueError):
    """The target equals its independence baseline; the merit is undefined."""


def matrix_norm(A, kind: str = "spectral") -> float:
    A = np.asarray(A, dtype=float)
    if kind == "spectral":
        sym = (A + A.T) / 2.0
        return float(np.abs(np.linalg.eigvalsh(sym)).max())
    if kind == "frobenius":
        return float(np.linalg.norm(A, "fro"))
    raise ValueError(f"unknown norm {kind!r}")


def figure_of_merit(M, Mq, norm: str = "spectral") -> float:
    """Normalized improvement of the achieved moments over independence.

    1 means the target is reproduced exactly in the chosen norm, 0 means
    no better than the independence matrix with the same mean, and
    negative values mean worse than independence.  A target that *is*
    its own independence matrix has no baseline to improve on and raises
    :class:`DegenerateTargetError`.
    """
    M = np.asarray(M, dtype=float)
    Mq = np.asarray(Mq, dtype=float)
    if M.shape != Mq.shape:
        raise ValueError("achieved moments must match the target's shape")
    baseline = matrix_norm(M - independence_moments(np.diag(M)), norm)
    if baseline < 1e-15:
        raise DegenerateTargetError("target has no correlation to reproduce")
    return (baseline - matrix_norm(M - Mq, norm)) / baseline


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; mirrors the CLI's JSON config field for field.

    ``rho_levels`` equispaced difficulty levels span [0, 1].  Families
    are fitted exactly and scored by enumeration up to ``exact_dim``;
    beyond it the conditionals families switch to Monte Carlo fitting
    with ``n_fit`` samples and moment estimation with ``n_est`` samples
    (the dichotomized-Gaussian family always scores through its closed
    form).  ``gen_permutation_steps`` / ``gen_replacement_sweeps`` of
    None keep the generator's long-chain defaults.
    """

    dims: tuple[int, ...] = (10, 25, 50)
    rho_levels: int = 15
    matrices_per_cell: int = 200
    families: tuple[str, ...] = (FAMILY_LOGISTIC, FAMILY_LINEAR, FAMILY_GAUSSIAN)
    n_fit: int = 10_000
    n_est: int = 1_000_000
    norm: str = "spectral"
    base_seed: int = 0
    workers: int = 1
    exact_dim: int = 10
    gen_permutation_steps: int | None = None
    gen_replacement_sweeps: int | None = None

    def __post_init__(self):
        if self.rho_levels < 1 or self.matrices_per_cell < 1 or self.workers < 1:
            raise ValueError("counts must be >= 1")
        unknown = set(self.families) - set(KNOWN_FAMILIES)
        if unknown:
            raise ValueError(f"unknown families {sorted(unknown)}; choose from {KNOWN_FAMILIES}")

    @property
    def rho_grid(self) -> np.ndarray:
        if self.rho_levels == 1:
            return np.array([0.0])
        return np.linspace(0.0, 1.0, self.rho_levels)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "rho_levels": self.rho_levels,
            "matrices_per_cell": self.matrices_per_cell,
            "families": list(self.families),
            "n_fit": self.n_fit,
            "n_est": self.n_est,
            "norm": self.norm,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "exact_dim": self.exact_dim,
            "gen_permutation_steps": self.gen_permutation_steps,
            "gen_replacement_sweeps": self.gen_replacement_sweeps,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        kwargs = dict(payload)
        if "dims" in kwargs:
            kwargs["dims"] = tuple(kwargs["dims"])
        if "families" in kwargs:
            kwargs["families"] = tuple(kwargs["families"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ExperimentRecord:
    """One (matrix, family) benchmark outcome; reproducible from its seed."""

    d: int
    rho: float
    family: str
    matrix_index: int
    tau: float
    lambda_min: float
    repaired: bool
    seed: int
    wall_time: float = 0.0
    error: str | None = None

    def csv_row(self) -> tuple:
        return (self.d, repr(self.rho), self.family, self.matrix_index, repr(self.tau),
                repr(self.lambda_min), self.repaired, self.seed)


def _matrix_seed_sequence(cfg: ExperimentConfig, d: int, rho_index: int,
                          matrix_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(cfg.base_seed, d, rho_index, matrix_index))


def _estimate_moments(family: ConditionalsFamily, d: int, cfg: ExperimentConfig,
                      rng: np.random.Generator) -> np.ndarray:
    if d <= cfg.exact_dim:
        return family.moments(method="exact")
    return family.moments(method="mc", n=cfg.n_est, rng=rng)


def _matrix_records(cfg: ExperimentConfig, d: int, rho_index: int,
                    matrix_index: int) -> list[ExperimentRecord]:
    rho = float(cfg.rho_grid[rho_index])
    root = _matrix_seed_sequence(cfg, d, rho_index, matrix_index)
    seed_id = int(root.generate_state(1)[0])
    streams = root.spawn(1 + 2 * len(cfg.families))
    gen_rng = np.random.Generator(np.random.PCG64(streams[0]))
    gen_kwargs = {"dim": d, "difficulty": rho,
                  "permutation_steps": cfg.gen_permutation_steps}
    if cfg.gen_replacement_sweeps is not None:
        gen_kwargs["replacement_sweeps"] = cfg.gen_replacement_sweeps
    gen_cfg = GenConfig(**gen_kwargs)
    M = random_cross_moment_matrix(gen_cfg, gen_rng)

    records = []
    for k, fam in enumerate(cfg.families):
        fit_rng = np.random.Generator(np.random.PCG64(streams[1 + 2 * k]))
        est_rng = np.random.Generator(np.random.PCG64(streams[2 + 2 * k]))
        t0 = time.perf_counter()
        lam_min, repaired, tau, err = 1.0, False, math.nan, None
        try:
            if fam == FAMILY_LOGISTIC:
                fit_cfg = FitConfig(method="exact" if d <= cfg.exact_dim else "mc",
                                    mc_samples=cfg.n_fit)
                family, report = fit(M, LOGISTIC, fit_cfg, fit_rng)
                lam_min = report.min_lambda
                Mq = _estimate_moments(family, d, cfg, est_rng)
            elif fam == FAMILY_LINEAR:
                family = fit_linear(M)
                Mq = _estimate_moments(family, d, cfg, est_rng)
            elif fam == FAMILY_GAUSSIAN:
                gc = fit_gc(M)
                repaired = gc.repaired
                Mq = gc.moments()
            else:
                raise ValueError(f"unknown family {fam!r}")
            tau = figure_of_merit(M, Mq, cfg.norm)
        except Exception as exc:  # per-matrix failures are data, not aborts
            err = f"{type(exc).__name__}: {exc}"
        records.append(ExperimentRecord(
            d=d, rho=rho, family=fam, matrix_index=matrix_index, tau=tau,
            lambda_min=lam_min, repaired=repaired, seed=seed_id,
            wall_time=time.perf_counter() - t0, error=err,
        ))
    return records


def _task(args) -> list[ExperimentRecord]:
    cfg_payload, d, rho_index, matrix_index = args
    return _matrix_records(ExperimentConfig.from_dict(cfg_payload), d, rho_index, matrix_index)


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Run the full sweep and return records in canonical order.

    Each (dimension, difficulty, matrix) task is independent with its own
    derived seed, so the result is identical for any worker count.
    """
    tasks = [
        (cfg.to_dict(), d, ri, mi)
        for d in cfg.dims
        for ri in range(cfg.rho_levels)
        for mi in range(cfg.matrices_per_cell)
    ]
    if cfg.workers == 1:
        chunks = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_task, tasks, chunksize=4))
    records = [r for chunk in chunks for r in chunk]
    order = {name: k for k, name in enumerate(cfg.families)}
    records.sort(key=lambda r: (r.d, r.rho, order[r.family], r.matrix_index))
    return records


# ---------------------------------------------------------------------------
# Aggregation and emission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantileBands:
    """Sorted-merit summary of one (dimension, family, difficulty) cell."""

    d: int
    family: str
    rho: float
    count: int
    median: float
    omegas: tuple[float, ...]
    lows: tuple[float, ...]
    highs: tuple[float, ...]


def aggregate_quantiles(records, n_omegas: int = 20) -> list[QuantileBands]:
    """Median and symmetric quantile pairs per cell.

    For sorted merits ``t_1 <= ... <= t_n`` and each of ``n_omegas``
    equidistant ``omega`` in [0, 0.5], the band is
    ``(t_floor((0.5-omega)n), t_ceil((0.5+omega)n))`` (1-indexed, clamped
    to the sample); ``omega = 0.5`` spans the full range.  Cells whose
    records all failed are skipped with a warning.
    """
    cells: dict[tuple[int, str, float], list[float]] = {}
    for r in records:
        cells.setdefault((r.d, r.family, r.rho), []).append(r.tau)
    omegas = np.linspace(0.0, 0.5, n_omegas)
    out = []
    for (d, family, rho), taus in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        clean = np.sort([t for t in taus if not math.isnan(t)])
        n = clean.size
        if n == 0:
            warnings.warn(f"cell d={d} family={family} rho={rho} has no usable records")
            continue
        lows, highs = [], []
        for w in omegas:
            lo_idx = max(int(math.floor((0.5 - w) * n)), 1)
            hi_idx = min(int(math.ceil((0.5 + w) * n)), n)
            lows.append(float(clean[lo_idx - 1]))
            highs.append(float(clean[hi_idx - 1]))
        out.append(QuantileBands(d, family, rho, n, float(np.median(clean)),
                                 tuple(float(w) for w in omegas), tuple(lows), tuple(highs)))
    return out


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(r.csv_row())


def read_records_csv(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for row in reader:
            out.append(ExperimentRecord(
                d=int(row[0]), rho=float(row[1]), family=row[2],
                matrix_index=int(row[3]), tau=float(row[4]),
                lambda_min=float(row[5]), repaired=(row[6] == "True"),
                seed=int(row[7]),
            ))
    return out
