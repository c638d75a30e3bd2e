"""Quadratic exponential (Ising-type) binary families.

Probability mass proportional to ``exp(gamma' A gamma)`` for a lower
triangular ``A``.  Full conditionals are logistic regressions in the
remaining components, and marginalizing the last component leaves a
quadratic form plus a softplus term.  Replacing the log-cosh part of that
softplus by its second-order expansion gives an approximate quadratic
family one dimension down; iterating and harvesting the last row at each
level assembles a logistic sequential-conditionals family that tracks the
original distribution closely when the couplings are weak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditionals import ConditionalsFamily, _check_lower_triangular
from .links import LOGISTIC
from .moments import ENUMERATION_CAP, DensePmf, _check_dim, as_binary_vector, state_table


@dataclass(frozen=True)
class CoxCoefficients:
    """Quadratic expansion of ``x -> log cosh(t/2 + x/2)`` around ``x = 0``."""

    c1: float
    c2: float
    c3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)


def _log_cosh(x: float) -> float:
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - math.log(2.0)


def cox_coefficients(a_dd: float) -> CoxCoefficients:
    """Expansion coefficients at half the last diagonal entry.

    ``c1 + c2*x + c3*x**2`` approximates ``log cosh(a_dd/2 + x/2)``;
    the curvature coefficient is an eighth of a squared sech and is
    therefore always nonnegative.
    """
    half = a_dd / 2.0
    sech = 2.0 * math.exp(-abs(half)) / (1.0 + math.exp(-2.0 * abs(half)))
    return CoxCoefficients(_log_cosh(half), math.tanh(half) / 2.0, sech * sech / 8.0)


class QuadExpFamily:
    """Binary family with log mass ``h + gamma' A gamma``.

    The normalizer ``h`` is computed lazily by enumeration and therefore
    needs the dimension within the cap; conditionals and unnormalized
    marginals work at any dimension.
    """

    kind_tag = "quadexp"

    __slots__ = ("coeffs", "_log_norm", "_cumulative")

    def __init__(self, coeffs):
        self.coeffs = _check_lower_triangular(coeffs)
        self._log_norm = None
        self._cumulative = None

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def quad_form(self, gamma) -> float:
        g = np.asarray(gamma, dtype=float)
        return float(g @ (self.coeffs @ g))

    def _all_quad_forms(self) -> np.ndarray:
        S = state_table(self.dim)
        return np.sum(S * (S @ self.coeffs.T), axis=1)

    @property
    def log_norm(self) -> float:
        """``-log sum exp(quad form)``; requires an enumerable dimension."""
        if self._log_norm is None:
            _check_dim(self.dim)
            q = self._all_quad_forms()
            top = q.max()
            self._log_norm = float(-(top + math.log(np.exp(q - top).sum())))
        return self._log_norm

    def pmf(self, gamma) -> float:
        g = as_binary_vector(gamma, self.dim)
        return math.exp(self.log_norm + self.quad_form(g))

    def conditional(self, gamma, i: int) -> float:
        """``P(component i = 1 | all others)`` - a logistic regression term.

        Needs no normalizer, so this works beyond the enumeration cap.
        """
        g = as_binary_vector(gamma, self.dim)
        if not 0 <= i < self.dim:
            raise ValueError(f"component index {i} out of range")
        t = (
            self.coeffs[i, i]
            + float(self.coeffs[i, :i] @ g[:i])
            + float(self.coeffs[i + 1:, i] @ g[i + 1:])
        )
        return float(LOGISTIC(t))

    def marginal_head_logmass(self, gamma_head) -> float:
        """Log mass of the exact marginal over the first ``dim - 1`` components.

        Includes the family's log normalizer when the dimension is within
        the enumeration cap, else an offset of zero; either way the value
        is a valid unnormalized log mass.
        """
        if self.dim < 2:
            raise ValueError("the marginal needs dimension >= 2")
        g = as_binary_vector(gamma_head, self.dim - 1)
        d = self.dim
        head_quad = float(g @ (self.coeffs[: d - 1, : d - 1] @ g))
        t = self.coeffs[d - 1, d - 1] + float(self.coeffs[d - 1, : d - 1] @ g)
        offset = self.log_norm if d <= ENUMERATION_CAP else 0.0
        return offset + head_quad + float(np.logaddexp(0.0, t))

    def enumerate_pmf(self) -> DensePmf:
        _check_dim(self.dim)
        q = self._all_quad_forms()
        top = q.max()
        w = np.exp(q - top)
        return DensePmf(w / w.sum())

    def moments(self) -> np.ndarray:
        return self.enumerate_pmf().cross_moments()

    def sample(self, rng: np.random.Generator):
        """Draw one vector by dense-table inversion (dimension capped)."""
        if self._cumulative is None:
            self._cumulative = np.cumsum(self.enumerate_pmf().probs)
        cum = self._cumulative
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        k = min(k, cum.size - 1)
        gamma = state_table(self.dim)[k].copy()
        return gamma, self.pmf(gamma)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind_tag,
            "dim": self.dim,
            "rows": [[float(v) for v in self.coeffs[i, : i + 1]] for i in range(self.dim)],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "QuadExpFamily":
        dim = int(payload["dim"])
        rows = payload["rows"]
        if len(rows) != dim:
            raise ValueError("row count does not match the declared dimension")
        A = np.zeros((dim, dim))
        for i, row in enumerate(rows):
            if len(row) != i + 1:
                raise ValueError(f"row {i} must have {i + 1} entries")
            A[i, : i + 1] = row
        return cls(A)


def cox_marginal_step(family: QuadExpFamily) -> tuple[QuadExpFamily, float]:
    """Approximate marginal over the last component as a quadratic family.

    Returns the reduced family together with the additive log-normalizer
    shift ``log 2 + c1 + a_dd/2``: the approximate unnormalized marginal
    log mass is ``(h + shift) + gamma' A* gamma`` where ``h`` is the
    original family's normalizer.  The symmetric rank-one curvature term
    is folded below the diagonal, and its diagonal merges into the linear
    part because binary components square to themselves.
    """
    d = family.dim
    if d < 2:
        raise ValueError("marginalization needs dimension >= 2")
    A = family.coeffs
    a_dd = float(A[d - 1, d - 1])
    a_star = A[d - 1, : d - 1].copy()
    c = cox_coefficients(a_dd)
    core = A[: d - 1, : d - 1].copy()
    core[np.diag_indices(d - 1)] += (c.c2 + 0.5) * a_star + c.c3 * a_star**2
    for i in range(d - 1):
        for j in range(i):
            core[i, j] += 2.0 * c.c3 * a_star[i] * a_star[j]
    shift = math.log(2.0) + c.c1 + a_dd / 2.0
    return QuadExpFamily(core), shift


def derive_logistic_family(family: QuadExpFamily) -> ConditionalsFamily:
    """Logistic sequential-conditionals family approximating a quadratic one.

    At every level the last full conditional is exact and its coefficient
    row is harvested; the approximate marginal then becomes the next
    level.  For a diagonal coefficient matrix the result is the exact
    product family; off-diagonal couplings introduce an error that
    vanishes as they shrink to zero.
    """
    d = family.dim
    rows: list[np.ndarray] = [None] * d
    current = family
    for level in range(d, 0, -1):
        rows[level - 1] = np.array(current.coeffs[level - 1, :level])
        if level > 1:
            current, _ = cox_marginal_step(current)
    A = np.zeros((d, d))
    for i, row in enumerate(rows):
        A[i, : i + 1] = row
    return ConditionalsFamily(A, LOGISTIC)
