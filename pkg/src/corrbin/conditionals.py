"""Binary families defined through sequential regression conditionals.

The i-th component, given the previous ones, is Bernoulli with success
probability ``link(a_ii + sum_{j<i} a_ij * x_j)`` for a lower-triangular
coefficient matrix ``A``.  This makes exact point-wise evaluation and
forward sampling trivial, which is what the rest of the package builds on.
"""

from __future__ import annotations

import numpy as np

from .links import LinkFunction, get_link
from .moments import (
    ENUMERATION_CAP,
    DensePmf,
    _check_dim,
    _check_mean,
    as_binary_vector,
    state_table,
)


def _check_lower_triangular(coeffs) -> np.ndarray:
    A = np.array(coeffs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError("coefficient matrix must be square and nonempty")
    if not np.isfinite(A).all():
        raise ValueError("coefficient matrix must be finite")
    if A.shape[0] > 1 and np.abs(np.triu(A, 1)).max() > 0.0:
        raise ValueError("coefficient matrix must be lower triangular")
    A.setflags(write=False)
    return A


class ConditionalsFamily:
    """Sequential-conditionals binary family with a fixed link function.

    Instances are immutable; sampling takes an external random generator,
    so independent streams give safe parallel use.
    """

    kind_tag = "conditionals"

    __slots__ = ("coeffs", "link")

    def __init__(self, coeffs, link: LinkFunction):
        self.coeffs = _check_lower_triangular(coeffs)
        self.link = link

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def product(cls, mean, link: LinkFunction) -> "ConditionalsFamily":
        """Independent components: a diagonal matrix of link-inverted means."""
        m = _check_mean(mean)
        if not link.bijective:
            A = np.diag(np.asarray(m, dtype=float))
        else:
            A = np.diag(np.asarray(link.inverse(m), dtype=float))
        return cls(A, link)

    # -- point-wise evaluation ------------------------------------------------

    def conditional_prob(self, x, i: int) -> float:
        """Success probability of component ``i`` given components ``< i``."""
        t = self.coeffs[i, i] + float(self.coeffs[i, :i] @ np.asarray(x, dtype=float)[:i])
        return float(self.link(t))

    def pmf(self, gamma) -> float:
        g = as_binary_vector(gamma, self.dim)
        p = 1.0
        for i in range(self.dim):
            c = self.conditional_prob(g, i)
            p *= c if g[i] == 1.0 else 1.0 - c
        return p

    # -- sampling ---------------------------------------------------------------

    def sample(self, rng: np.random.Generator):
        """Draw one vector; returns ``(x, probability)``.

        Consumes exactly one uniform variate per component in index
        order, and the returned probability is computed along the same
        arithmetic path as :meth:`pmf`, so the two agree bit for bit.
        """
        x = np.zeros(self.dim)
        p = 1.0
        for i in range(self.dim):
            c = self.conditional_prob(x, i)
            if rng.random() < c:
                x[i] = 1.0
                p *= c
            else:
                p *= 1.0 - c
        return x, p

    def sample_many(self, n: int, rng: np.random.Generator):
        """Draw ``n`` vectors as an ``(n, dim)`` array plus their probabilities."""
        if n < 1:
            raise ValueError("sample count must be >= 1")
        A = self.coeffs
        U = rng.random((n, self.dim))
        X = np.zeros((n, self.dim))
        p = np.ones(n)
        for i in range(self.dim):
            t = X[:, :i] @ A[i, :i] + A[i, i]
            c = self.link(t)
            hit = U[:, i] < c
            X[:, i] = hit
            p *= np.where(hit, c, 1.0 - c)
        return X, p

    # -- moments ----------------------------------------------------------------

    def enumerate_pmf(self) -> DensePmf:
        """Dense probability table (dimension capped at ``ENUMERATION_CAP``)."""
        _check_dim(self.dim)
        A = self.coeffs
        S = state_table(self.dim)
        diag = np.diag(A)
        eta = S @ A.T - S * diag + diag
        C = self.link(eta)
        probs = np.where(S == 1.0, C, 1.0 - C).prod(axis=1)
        return DensePmf(probs)

    def moments(
        self,
        *,
        method: str = "exact",
        n: int | None = None,
        rng: np.random.Generator | None = None,
        chunk_size: int = 1 << 17,
    ) -> np.ndarray:
        """Cross-moment matrix of the family, exact or Monte Carlo.

        ``method="exact"`` enumerates all states (dimension capped);
        ``method="mc"`` averages ``x x^T`` over ``n`` fresh samples drawn
        from ``rng``, accumulated in chunks.
        """
        if method == "exact":
            pmf = self.enumerate_pmf()
            return pmf.cross_moments()
        if method != "mc":
            raise ValueError(f"unknown moment method {method!r}")
        if n is None or n < 1:
            raise ValueError("Monte Carlo moments need a sample count n >= 1")
        if rng is None:
            raise ValueError("Monte Carlo moments need a random generator")
        acc = np.zeros((self.dim, self.dim))
        left = n
        while left > 0:
            take = min(chunk_size, left)
            X, _ = self.sample_many(take, rng)
            acc += X.T @ X
            left -= take
        M = acc / n
        return (M + M.T) / 2.0

    # -- serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind_tag,
            "dim": self.dim,
            "link": self.link.name,
            "rows": [[float(v) for v in self.coeffs[i, : i + 1]] for i in range(self.dim)],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ConditionalsFamily":
        dim = int(payload["dim"])
        rows = payload["rows"]
        if len(rows) != dim:
            raise ValueError("row count does not match the declared dimension")
        A = np.zeros((dim, dim))
        for i, row in enumerate(rows):
            if len(row) != i + 1:
                raise ValueError(f"row {i} must have {i + 1} entries")
            A[i, : i + 1] = row
        return cls(A, get_link(payload["link"]))
