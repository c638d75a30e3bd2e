"""Moment machinery for multivariate binary distributions.

Dense enumeration tables, feasibility checks for cross-moment targets,
orthonormal-expansion utilities and distance bounds.  Everything in this
module is exact up to floating point and serves both as a small-dimension
user API and as the verification backbone for the samplers and fitting
routines in the rest of the package.

Conventions
-----------
* Components are 0-indexed.
* A probability table over all binary vectors of length ``d`` has
  ``2**d`` entries in lexicographic bit order where component 0 is the
  least significant bit of the table index.
* A cross-moment matrix ``M`` is symmetric with the mean vector on the
  diagonal and pairwise success probabilities ``E[X_i X_j]`` off it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

#: Hard cap on dimensions for dense enumeration (2**20 table entries).
ENUMERATION_CAP = 20

#: Tolerance on the smallest eigenvalue of the covariance in feasibility checks.
COVARIANCE_EIG_TOL = 1e-10


class EnumerationCapError(ValueError):
    """An operation would enumerate more than ``2**ENUMERATION_CAP`` states."""


class InfeasibleCoefficientsError(ValueError):
    """An expansion coefficient set produces negative probabilities."""


def _check_dim(dim: int) -> None:
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if dim > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"dimension {dim} exceeds the enumeration cap ({ENUMERATION_CAP})"
        )


@lru_cache(maxsize=32)
def _state_table_cached(dim: int) -> np.ndarray:
    codes = np.arange(2**dim, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(dim)) & 1
    table = bits.astype(float)
    table.setflags(write=False)
    return table


def state_table(dim: int) -> np.ndarray:
    """All binary vectors of length ``dim``, one per row, in table order.

    Row ``k`` is the vector whose component ``i`` equals bit ``i`` of
    ``k``.  The array is cached and read-only.
    """
    _check_dim(dim)
    return _state_table_cached(dim)


def state_index(gamma) -> int:
    """Table index of a binary vector (component 0 = least significant bit)."""
    g = np.asarray(gamma)
    return int(np.sum((g != 0) * (1 << np.arange(g.size, dtype=np.int64))))


def as_binary_vector(gamma, dim: int | None = None) -> np.ndarray:
    """Validate and return ``gamma`` as a float array of exact 0/1 entries."""
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("binary vector must be one-dimensional and nonempty")
    if dim is not None and g.size != dim:
        raise ValueError(f"binary vector has length {g.size}, expected {dim}")
    if not np.all((g == 0.0) | (g == 1.0)):
        raise ValueError("binary vector entries must be exactly 0 or 1")
    return g


def _check_mean(mean) -> np.ndarray:
    m = np.asarray(mean, dtype=float)
    if m.ndim != 1 or m.size < 1:
        raise ValueError("mean vector must be one-dimensional and nonempty")
    if np.any(m <= 0.0) or np.any(m >= 1.0):
        raise ValueError("mean entries must lie strictly inside (0, 1)")
    return m


def product_pmf_table(mean) -> np.ndarray:
    """Probability table of independent Bernoulli components."""
    m = _check_mean(mean)
    s = state_table(m.size)
    return np.where(s == 1.0, m, 1.0 - m).prod(axis=1)


class DensePmf:
    """Dense probability table over all binary vectors of one dimension.

    Parameters
    ----------
    probs : array_like
        ``2**d`` nonnegative reals summing to one within 1e-12.  Entries
        in ``[-1e-12, 0)`` are clipped to zero; anything lower raises.
    normalize : bool
        Divide by the total instead of insisting on an exact unit sum.
    """

    __slots__ = ("probs", "dim")

    def __init__(self, probs, *, normalize: bool = False):
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size < 2 or (p.size & (p.size - 1)) != 0:
            raise ValueError("probability table length must be a power of two >= 2")
        dim = p.size.bit_length() - 1
        _check_dim(dim)
        if p.min() < -1e-12:
            raise ValueError(f"probability table has negative entry {p.min():g}")
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if normalize:
            if total <= 0.0:
                raise ValueError("cannot normalize an all-zero table")
            p = p / total
        elif abs(total - 1.0) > 1e-12:
            raise ValueError(f"probability table sums to {total!r}, not 1")
        p.setflags(write=False)
        self.probs = p
        self.dim = dim

    # -- construction helpers -------------------------------------------------

    @classmethod
    def product(cls, mean) -> "DensePmf":
        """Independent Bernoulli components with the given means."""
        return cls(product_pmf_table(mean))

    @classmethod
    def uniform(cls, dim: int) -> "DensePmf":
        _check_dim(dim)
        return cls(np.full(2**dim, 1.0 / 2**dim))

    # -- queries ---------------------------------------------------------------

    def pmf(self, gamma) -> float:
        g = as_binary_vector(gamma, self.dim)
        return float(self.probs[state_index(g)])

    def mean(self) -> np.ndarray:
        return self.probs @ state_table(self.dim)

    def moment(self, indices: Iterable[int]) -> float:
        """Joint success probability ``P(X_i = 1 for all i in indices)``.

        The empty index set gives 1 by convention.
        """
        idx = sorted(set(int(i) for i in indices))
        if not idx:
            return 1.0
        if idx[0] < 0 or idx[-1] >= self.dim:
            raise ValueError(f"index set {idx} out of range for dimension {self.dim}")
        s = state_table(self.dim)
        return float(self.probs @ s[:, idx].prod(axis=1))

    def cross_moments(self) -> np.ndarray:
        """Matrix of pairwise success probabilities with the mean on the diagonal."""
        s = state_table(self.dim)
        m = s.T @ (s * self.probs[:, None])
        return (m + m.T) / 2.0

    def marginal_head(self) -> "DensePmf":
        """Marginal over the first ``dim - 1`` components."""
        if self.dim < 2:
            raise ValueError("cannot marginalize a one-dimensional table")
        half = 2 ** (self.dim - 1)
        return DensePmf(self.probs[:half] + self.probs[half:])

    def sample(self, rng: np.random.Generator):
        """Draw one vector by table inversion; returns ``(gamma, probability)``."""
        cum = np.cumsum(self.probs)
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        k = min(k, self.probs.size - 1)
        gamma = state_table(self.dim)[k].copy()
        return gamma, float(self.probs[k])

    def l1_distance(self, other: "DensePmf") -> float:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return float(np.abs(self.probs - other.probs).sum())


def oracle_moments(pmf: DensePmf, indices: Iterable[int]) -> float:
    """Brute-force cross-moment of a dense table (enumeration oracle)."""
    return pmf.moment(indices)


# ---------------------------------------------------------------------------
# Feasibility of cross-moment targets
# ---------------------------------------------------------------------------


def frechet_bounds(indices: Iterable[int], mean) -> tuple[float, float]:
    """Sharp lower/upper bounds on a joint success probability.

    Given marginal means, the probability that all components in the
    index set are one is at least ``max(sum(m_i) - |I| + 1, 0)`` and at
    most ``min(m_i)`` (the first-order relaxation of the subset-wise
    upper bound, which would need higher-order moments to evaluate).
    """
    idx = sorted(set(int(i) for i in indices))
    if not idx:
        raise ValueError("index set must be nonempty")
    m = _check_mean(mean)
    if idx[0] < 0 or idx[-1] >= m.size:
        raise ValueError(f"index set {idx} out of range for dimension {m.size}")
    sel = m[idx]
    lo = max(float(sel.sum()) - len(idx) + 1.0, 0.0)
    hi = float(sel.min())
    return lo, hi


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of a cross-moment matrix validity check."""

    violations: tuple[str, ...]
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_cross_moments(M, *, eig_tol: float = COVARIANCE_EIG_TOL) -> FeasibilityReport:
    """Check whether ``M`` is a feasible cross-moment matrix of binary data.

    Conditions: diagonal strictly inside (0, 1), every off-diagonal entry
    within its pairwise bounds, and the covariance ``M - mm^T`` positive
    definite (smallest symmetrized eigenvalue above ``eig_tol``).  A
    non-square or asymmetric (beyond 1e-12) input is an argument error;
    everything else is reported, not raised.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("cross-moment matrix must be square")
    if A.shape[0] < 1:
        raise ValueError("cross-moment matrix must be at least 1x1")
    if not np.isfinite(A).all():
        raise ValueError("cross-moment matrix must be finite")
    if np.abs(A - A.T).max() > 1e-12:
        raise ValueError("cross-moment matrix must be symmetric within 1e-12")

    d = A.shape[0]
    m = np.diag(A)
    violations: list[str] = []
    for i in range(d):
        if not (0.0 < m[i] < 1.0):
            violations.append(f"diagonal entry {i} outside (0, 1): {m[i]!r}")
    for i in range(d):
        for j in range(i + 1, d):
            lo = max(m[i] + m[j] - 1.0, 0.0)
            hi = min(m[i], m[j])
            if A[i, j] < lo:
                violations.append(
                    f"entry ({i},{j}) below pairwise lower bound: {A[i, j]!r} < {lo!r}"
                )
            elif A[i, j] > hi:
                violations.append(
                    f"entry ({i},{j}) above pairwise upper bound: {A[i, j]!r} > {hi!r}"
                )
    cov = A - np.outer(m, m)
    cov = (cov + cov.T) / 2.0
    min_eig = float(np.linalg.eigvalsh(cov)[0])
    if min_eig <= eig_tol:
        violations.append(
            f"covariance not positive definite: smallest eigenvalue {min_eig!r}"
        )
    return FeasibilityReport(tuple(violations), min_eig)


def is_realizable(M, *, margin: float = 0.0) -> bool:
    """Exact check that some binary distribution has these pairwise moments.

    Solves the linear feasibility problem over the dense state space, so
    the dimension is capped.  This is strictly stronger than
    :func:`validate_cross_moments`: pairwise bounds plus a positive
    definite covariance do not rule out violations of higher-order
    moment constraints, and such matrices are not the cross-moment
    matrix of any binary distribution.  With ``margin > 0`` the check
    requires a distribution with all state probabilities at least
    ``margin`` (strict interior).
    """
    from scipy.optimize import linprog

    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("cross-moment matrix must be square")
    d = A.shape[0]
    _check_dim(d)
    S = state_table(d)
    rows = [np.ones(2**d)]
    rhs = [1.0]
    for i in range(d):
        for j in range(i, d):
            rows.append(S[:, i] * S[:, j])
            rhs.append(A[i, j])
    res = linprog(
        c=np.zeros(2**d),
        A_eq=np.array(rows),
        b_eq=np.array(rhs),
        bounds=(margin, None),
        method="highs",
    )
    return bool(res.status == 0)


def independence_moments(mean) -> np.ndarray:
    """Cross-moment matrix of independent components with the given means."""
    m = _check_mean(mean)
    M = np.outer(m, m)
    np.fill_diagonal(M, m)
    return M


def correlation_to_moments(mean, corr) -> tuple[np.ndarray, FeasibilityReport]:
    """Convert a (mean, correlation) pair to a cross-moment matrix.

    Returns the matrix together with its feasibility report; not every
    correlation matrix is attainable by binary data for a given mean.
    """
    m = _check_mean(mean)
    C = np.asarray(corr, dtype=float)
    if C.shape != (m.size, m.size):
        raise ValueError("correlation matrix shape does not match the mean vector")
    if np.abs(C - C.T).max() > 1e-12:
        raise ValueError("correlation matrix must be symmetric")
    if np.abs(np.diag(C) - 1.0).max() > 1e-12:
        raise ValueError("correlation matrix must have a unit diagonal")
    if np.abs(C).max() > 1.0 + 1e-12:
        raise ValueError("correlation entries must lie in [-1, 1]")
    s = np.sqrt(m * (1.0 - m))
    M = C * np.outer(s, s) + np.outer(m, m)
    np.fill_diagonal(M, m)
    return M, validate_cross_moments(M)


def moments_to_correlation(M) -> tuple[np.ndarray, np.ndarray]:
    """Split a cross-moment matrix into its mean vector and correlation matrix."""
    A = np.asarray(M, dtype=float)
    m = np.diag(A).copy()
    s = np.sqrt(m * (1.0 - m))
    C = (A - np.outer(m, m)) / np.outer(s, s)
    np.fill_diagonal(C, 1.0)
    return m, C


# ---------------------------------------------------------------------------
# Orthonormal expansion around the product family
# ---------------------------------------------------------------------------


def _normalize_index_set(I, dim: int) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(i) for i in I)))
    if len(idx) != len(tuple(I)):
        raise ValueError(f"index set {tuple(I)} contains duplicates")
    if idx and (idx[0] < 0 or idx[-1] >= dim):
        raise ValueError(f"index set {idx} out of range for dimension {dim}")
    return idx


def _standardized_columns(dim: int, mean: np.ndarray) -> np.ndarray:
    s = np.sqrt(mean * (1.0 - mean))
    return (state_table(dim) - mean) / s


def bahadur_pmf(mean, coeffs: Mapping) -> DensePmf:
    """Build a dense table from generalized correlation coefficients.

    The table is the product family times ``1 + sum_I c_I u_I`` where
    ``u_I`` multiplies the standardized components indexed by ``I``.
    Coefficients are given for index sets of size two or more (missing
    sets count as zero; the empty set is fixed at one and singletons at
    zero).  Raises :class:`InfeasibleCoefficientsError` if any resulting
    entry is below ``-1e-12``.
    """
    m = _check_mean(mean)
    d = m.size
    Z = _standardized_columns(d, m)
    factor = np.ones(2**d)
    for I, c in coeffs.items():
        idx = _normalize_index_set(I, d)
        if len(idx) < 2:
            raise ValueError(f"coefficients are only accepted for |I| >= 2, got {idx}")
        if c == 0.0:
            continue
        factor += float(c) * Z[:, idx].prod(axis=1)
    probs = product_pmf_table(m) * factor
    if probs.min() < -1e-12:
        raise InfeasibleCoefficientsError(
            f"coefficient set yields negative probability {probs.min():g}"
        )
    return DensePmf(np.clip(probs, 0.0, None))


def extract_coefficients(pmf: DensePmf, *, min_size: int = 2) -> dict[tuple[int, ...], float]:
    """Generalized correlation coefficients of a dense table.

    Computes ``c_I = E[u_I]`` with respect to the table's own mean for
    every index set of size at least ``min_size``.  Cost grows as
    ``2**d`` times the table size; intended for small dimensions.
    """
    d = pmf.dim
    m = pmf.mean()
    if np.any(m <= 0.0) or np.any(m >= 1.0):
        raise ValueError("coefficients need a mean strictly inside (0, 1)")
    Z = _standardized_columns(d, m)
    out: dict[tuple[int, ...], float] = {}
    for size in range(min_size, d + 1):
        for idx in itertools.combinations(range(d), size):
            out[idx] = float(pmf.probs @ Z[:, idx].prod(axis=1))
    if min_size <= 1:
        for i in range(d):
            out[(i,)] = float(pmf.probs @ Z[:, i])
    if min_size == 0:
        out[()] = float(pmf.probs.sum())
    return out


def lp_distance_check(pi: DensePmf, omega: DensePmf, p: float) -> tuple[float, float]:
    """Raw l^p distance between two same-mean tables and its coefficient bound.

    Returns ``(lhs, bound)`` where ``lhs = sum |pi - omega|**p`` and
    ``bound = sum_I 2**((1 - min(p, 2)) |I|) |c_I^pi - c_I^omega|**p``
    over all index sets.  The inequality ``lhs <= bound`` requires both
    tables to share their mean vector; mismatched means (beyond 1e-10)
    are a precondition error.
    """
    if pi.dim != omega.dim:
        raise ValueError("dimension mismatch")
    if p < 1.0:
        raise ValueError("the exponent must satisfy p >= 1")
    mean_gap = float(np.abs(pi.mean() - omega.mean()).max())
    if mean_gap > 1e-10:
        raise ValueError(
            f"the bound requires equal means; largest component gap is {mean_gap:g}"
        )
    lhs = float((np.abs(pi.probs - omega.probs) ** p).sum())
    c_pi = extract_coefficients(pi, min_size=0)
    c_om = extract_coefficients(omega, min_size=0)
    shrink = 1.0 - min(p, 2.0)
    bound = 0.0
    for idx in set(c_pi) | set(c_om):
        diff = abs(c_pi.get(idx, 0.0) - c_om.get(idx, 0.0))
        if diff:
            bound += 2.0 ** (shrink * len(idx)) * diff**p
    return lhs, bound
