"""Row-wise moment matching for sequential-conditionals families.

Rows of the coefficient matrix are fitted one at a time: row ``i`` solves
``E[link((x, 1) @ a) * (x, 1)] = target`` where the expectation runs over
the already-fitted prefix family, either exactly (enumeration) or through
a frozen Monte Carlo sample.  A damped Newton iteration does the solving;
when it fails, the target is pulled back toward independence along a
homotopy path and the largest reachable point is kept, which in
particular pins the fitted mean to the requested diagonal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .conditionals import ConditionalsFamily
from .links import LinkFunction, TRUNCATED_LINEAR
from .moments import state_table, validate_cross_moments

#: Largest dimension fitted by exact enumeration when ``method="auto"``.
EXACT_FIT_DIM = 10

ROW_CONVERGED = "converged"
ROW_DIVERGED = "diverged"
ROW_BOUNDARY = "boundary"


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the row-wise Newton fit.

    ``method`` is ``"exact"``, ``"mc"`` or ``"auto"`` (exact up to
    :data:`EXACT_FIT_DIM`, Monte Carlo beyond).  ``tolerance`` of None
    resolves to 1e-8 for exact and 1e-3 for Monte Carlo expectations.
    The homotopy grid has ``homotopy_steps`` equispaced points from 0
    (independence) to 1 (full target).  Newton fails a row when it runs
    out of iterations, meets a singular Jacobian, stalls through
    ``max_step_halvings`` dampings, or any coefficient passes
    ``param_cap`` in absolute value.
    """

    method: str = "auto"
    mc_samples: int = 10_000
    max_iterations: int = 50
    tolerance: float | None = None
    homotopy_steps: int = 10
    param_cap: float = 30.0
    max_step_halvings: int = 20
    max_step: float = 4.0
    exact_dim_limit: int = EXACT_FIT_DIM

    def resolve_method(self, dim: int) -> str:
        if self.method == "auto":
            return "exact" if dim <= self.exact_dim_limit else "mc"
        if self.method not in ("exact", "mc"):
            raise ValueError(f"unknown fit method {self.method!r}")
        return self.method

    def resolve_tolerance(self, method: str) -> float:
        if self.tolerance is not None:
            if self.tolerance <= 0:
                raise ValueError("tolerance must be positive")
            return self.tolerance
        return 1e-8 if method == "exact" else 1e-3


@dataclass(frozen=True)
class RowFit:
    """Outcome of fitting one coefficient row."""

    index: int
    status: str
    iterations: int
    residual: float
    lam: float
    jacobian_dets: tuple[float, ...] = ()


@dataclass
class FitReport:
    """Per-row fit outcomes plus overall wall time."""

    rows: list[RowFit] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.rows])

    @property
    def min_lambda(self) -> float:
        return float(self.lambdas.min()) if self.rows else 1.0

    @property
    def converged(self) -> bool:
        return bool(self.rows) and all(r.lam == 1.0 for r in self.rows)


class _RowProblem:
    """Weighted design for one row: f(a) and its Jacobian under the prefix law."""

    def __init__(self, weights: np.ndarray, design: np.ndarray, link: LinkFunction):
        self.weights = weights
        self.design = design
        self.link = link

    @classmethod
    def exact(cls, prefix: ConditionalsFamily, link: LinkFunction) -> "_RowProblem":
        pmf = prefix.enumerate_pmf()
        S = state_table(prefix.dim)
        design = np.hstack([S, np.ones((S.shape[0], 1))])
        return cls(pmf.probs, design, link)

    @classmethod
    def monte_carlo(
        cls, prefix: ConditionalsFamily, link: LinkFunction, n: int, rng: np.random.Generator
    ) -> "_RowProblem":
        X, _ = prefix.sample_many(n, rng)
        design = np.hstack([X, np.ones((n, 1))])
        return cls(np.full(n, 1.0 / n), design, link)

    def value(self, a: np.ndarray) -> np.ndarray:
        mu = self.link(self.design @ a)
        return self.design.T @ (self.weights * mu)

    def jacobian(self, a: np.ndarray) -> np.ndarray:
        dmu = self.link.deriv(self.design @ a)
        return self.design.T @ (self.design * (self.weights * dmu)[:, None])

    def potential(self, a: np.ndarray, target: np.ndarray) -> float:
        # Convex in a, with gradient value(a) - target: moment matching is
        # the first-order condition of this minimization.
        psi = self.link.potential(self.design @ a)
        return float(self.weights @ psi - target @ a)


@dataclass(frozen=True)
class _NewtonResult:
    status: str
    a: np.ndarray
    iterations: int
    residual: float
    jacobian_dets: tuple[float, ...]


def _newton_solve(problem: _RowProblem, target: np.ndarray, a0: np.ndarray,
                  cfg: FitConfig, tol: float) -> _NewtonResult:
    a = a0.astype(float).copy()
    r = problem.value(a) - target
    rn = float(np.abs(r).max())
    phi = problem.potential(a, target)
    dets: list[float] = []
    eye = np.eye(a.size)
    for it in range(cfg.max_iterations):
        if rn <= tol:
            return _NewtonResult(ROW_CONVERGED, a, it, rn, tuple(dets))
        J = problem.jacobian(a)
        # The residual is the gradient of a convex potential with Hessian
        # J (positive semidefinite), so every damped direction
        # (J + lam I)^-1 r strictly descends that potential; the Armijo
        # search below is therefore globally convergent.  Escalating
        # damping tames the exactly-singular saturated-link regime, and
        # the cap box keeps overshoot from masquerading as an unbounded
        # solution.
        ridge = max(float(np.trace(J)) / a.size, 1e-12)
        accepted = False
        left_box = False
        a_new, r_new, phi_new = a, r, phi
        for damping in (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2):
            try:
                step = np.linalg.solve(J + damping * ridge * eye if damping else J, r)
            except np.linalg.LinAlgError:
                continue
            if not np.isfinite(step).all():
                continue
            # Trust-region style clamp: near-singular Jacobians produce
            # enormous directions along almost-flat valleys that pass a
            # lax Armijo test yet march the iterate far from the solution.
            big = float(np.abs(step).max())
            if big > cfg.max_step:
                step = step * (cfg.max_step / big)
            slope = float(step @ r)
            if slope <= 0.0:
                continue
            scale = 1.0
            for _ in range(cfg.max_step_halvings + 1):
                a_try = a - scale * step
                if float(np.abs(a_try).max()) > cfg.param_cap:
                    left_box = True
                    scale *= 0.5
                    continue
                phi_try = problem.potential(a_try, target)
                if phi_try <= phi - 1e-4 * scale * slope:
                    accepted = True
                    a_new = a_try
                    r_new = problem.value(a_try) - target
                    phi_new = phi_try
                    break
                scale *= 0.5
            if accepted:
                break
        if not accepted:
            status = ROW_BOUNDARY if left_box else ROW_DIVERGED
            return _NewtonResult(status, a, it + 1, rn, tuple(dets))
        dets.append(float(np.linalg.det(J)))
        a, r, phi = a_new, r_new, phi_new
        rn = float(np.abs(r).max())
    if rn <= tol:
        return _NewtonResult(ROW_CONVERGED, a, cfg.max_iterations, rn, tuple(dets))
    status = ROW_BOUNDARY if float(np.abs(a).max()) >= 0.999 * cfg.param_cap else ROW_DIVERGED
    return _NewtonResult(status, a, cfg.max_iterations, rn, tuple(dets))


def _independence_start(link: LinkFunction, mean: float, size: int) -> np.ndarray:
    a0 = np.zeros(size)
    a0[-1] = float(link.inverse(mean))
    return a0


def fit_row(
    prefix: ConditionalsFamily,
    target,
    cfg: FitConfig | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, RowFit]:
    """Fit one new coefficient row on top of an already-fitted prefix.

    ``target`` stacks the requested cross moments with the components of
    the prefix followed by the new component's mean.  No homotopy is
    attempted here; a row that cannot be reached directly comes back with
    status ``"diverged"`` or ``"boundary"`` (coefficient magnitude cap).
    """
    cfg = cfg or FitConfig()
    t = np.asarray(target, dtype=float)
    if t.shape != (prefix.dim + 1,):
        raise ValueError(f"target must have length {prefix.dim + 1}")
    method = cfg.resolve_method(prefix.dim + 1)
    if method == "mc" and rng is None:
        raise ValueError("Monte Carlo fitting needs a random generator")
    problem = (
        _RowProblem.exact(prefix, prefix.link)
        if method == "exact"
        else _RowProblem.monte_carlo(prefix, prefix.link, cfg.mc_samples, rng)
    )
    tol = cfg.resolve_tolerance(method)
    res = _newton_solve(problem, t, _independence_start(prefix.link, t[-1], t.size), cfg, tol)
    lam = 1.0 if res.status == ROW_CONVERGED else 0.0
    return res.a, RowFit(prefix.dim, res.status, res.iterations, res.residual, lam,
                         res.jacobian_dets)


def _fit_row_with_homotopy(problem: _RowProblem, link: LinkFunction, row_index: int,
                           target_cov: np.ndarray, mean_new: float, mean_prefix: np.ndarray,
                           cfg: FitConfig, tol: float) -> tuple[np.ndarray, RowFit]:
    full_target = np.append(target_cov, mean_new)
    a0 = _independence_start(link, mean_new, full_target.size)
    res = _newton_solve(problem, full_target, a0, cfg, tol)
    if res.status == ROW_CONVERGED:
        return res.a, RowFit(row_index, res.status, res.iterations, res.residual, 1.0,
                             res.jacobian_dets)

    # Walk the target from independence toward the request, warm-starting
    # each stage, and keep the furthest point that still converges.
    independent_cov = mean_new * mean_prefix
    best_a, best_fit = a0, None
    a_warm = a0
    for lam in np.linspace(0.0, 1.0, cfg.homotopy_steps):
        staged = np.append(lam * target_cov + (1.0 - lam) * independent_cov, mean_new)
        stage = _newton_solve(problem, staged, a_warm, cfg, tol)
        if stage.status != ROW_CONVERGED:
            break
        a_warm = stage.a
        best_a = stage.a
        best_fit = RowFit(row_index, ROW_CONVERGED if lam == 1.0 else res.status,
                          stage.iterations, stage.residual, float(lam), stage.jacobian_dets)
    if best_fit is None:
        best_fit = RowFit(row_index, res.status, res.iterations, res.residual, 0.0,
                          res.jacobian_dets)
    return best_a, best_fit


def fit(
    M,
    link: LinkFunction,
    cfg: FitConfig | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[ConditionalsFamily, FitReport]:
    """Fit a sequential-conditionals family to a cross-moment matrix.

    Rows are built in index order; the first row is the link-inverted
    first mean, later rows are Newton-solved against the fitted prefix
    (with homotopy fallback).  The Monte Carlo estimator freezes one
    sample set per row, shared across homotopy stages, so each row solve
    is deterministic given ``rng``.

    Raises ``ValueError`` when ``M`` fails the feasibility check.
    """
    cfg = cfg or FitConfig()
    if not link.bijective:
        raise ValueError(
            "row-wise Newton fitting needs a bijective link; "
            "use fit_linear for the truncated linear family"
        )
    M = np.asarray(M, dtype=float)
    report = validate_cross_moments(M)
    if not report.ok:
        raise ValueError("target cross-moment matrix is infeasible: "
                         + "; ".join(report.violations))
    d = M.shape[0]
    method = cfg.resolve_method(d)
    tol = cfg.resolve_tolerance(method)
    if method == "mc" and rng is None:
        raise ValueError("Monte Carlo fitting needs a random generator")

    t0 = time.perf_counter()
    A = np.zeros((d, d))
    A[0, 0] = float(link.inverse(M[0, 0]))
    out = FitReport()
    out.rows.append(RowFit(0, ROW_CONVERGED, 0, 0.0, 1.0))
    for i in range(1, d):
        prefix = ConditionalsFamily(A[:i, :i], link)
        problem = (
            _RowProblem.exact(prefix, link)
            if method == "exact"
            else _RowProblem.monte_carlo(prefix, link, cfg.mc_samples, rng)
        )
        a, row_fit = _fit_row_with_homotopy(
            problem, link, i, M[i, :i], M[i, i], np.diag(M)[:i], cfg, tol
        )
        A[i, : i + 1] = a
        out.rows.append(row_fit)
    out.wall_time = time.perf_counter() - t0
    return ConditionalsFamily(A, link), out


# ---------------------------------------------------------------------------
# Truncated linear family: closed-form rows
# ---------------------------------------------------------------------------


def column_attainable(prefix: ConditionalsFamily, target) -> bool:
    """Exact test that a target column is reachable over the given prefix.

    Decides by linear programming whether any assignment of per-state
    conditional success probabilities in [0, 1] reproduces the requested
    cross-moment column; the row map's range is exactly the (relative
    interior of the) corresponding polytope, so an infeasible program is
    a certificate that no coefficient row, however large, can reach the
    target.  Enumerates the prefix, so its dimension is capped.
    """
    from scipy.optimize import linprog

    t = np.asarray(target, dtype=float)
    if t.shape != (prefix.dim + 1,):
        raise ValueError(f"target must have length {prefix.dim + 1}")
    weights = prefix.enumerate_pmf().probs
    S = state_table(prefix.dim)
    design = np.hstack([S, np.ones((S.shape[0], 1))])
    res = linprog(
        c=np.zeros(weights.size),
        A_eq=(design * weights[:, None]).T,
        b_eq=t,
        bounds=(0.0, 1.0),
        method="highs",
    )
    return bool(res.status == 0)


def bordered_moment_matrix(M, k: int) -> np.ndarray:
    """Leading ``k x k`` block of ``M`` bordered by its mean column and a one."""
    M = np.asarray(M, dtype=float)
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = M[:k, :k]
    out[:k, k] = out[k, :k] = np.diag(M)[:k]
    out[k, k] = 1.0
    return out


def solve_linear_row(extended, target) -> np.ndarray:
    """Solve the bordered linear system one row of the linear family needs.

    ``extended`` is the bordered moment matrix of the prefix and
    ``target`` the requested cross-moment column with the new mean last.
    A singular bordered matrix is a precondition failure.
    """
    ext = np.asarray(extended, dtype=float)
    t = np.asarray(target, dtype=float)
    try:
        return np.linalg.solve(ext, t)
    except np.linalg.LinAlgError as exc:
        raise ValueError("bordered moment matrix is singular") from exc


def fit_linear(M) -> ConditionalsFamily:
    """Fit the truncated-linear conditionals family by direct linear solves.

    Coefficients come from the untruncated linear system; truncation
    only applies when the family is evaluated or sampled, so the
    achieved moments drift from the target exactly where the clamp
    binds.
    """
    M = np.asarray(M, dtype=float)
    report = validate_cross_moments(M)
    if not report.ok:
        raise ValueError("target cross-moment matrix is infeasible: "
                         + "; ".join(report.violations))
    d = M.shape[0]
    A = np.zeros((d, d))
    A[0, 0] = M[0, 0]
    for i in range(1, d):
        target = np.append(M[i, :i], M[i, i])
        A[i, : i + 1] = solve_linear_row(bordered_moment_matrix(M, i), target)
    return ConditionalsFamily(A, TRUNCATED_LINEAR)
