"""Independence Metropolis-Hastings over binary state spaces.

Any fitted family that supports point-wise evaluation can serve as the
proposal.  Besides running chains, this module enumerates the full
transition kernel at small dimensions so that detailed balance and the
decomposition of the one-step auto-covariance can be checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .moments import DensePmf, as_binary_vector, state_table


@dataclass(frozen=True)
class TargetDensity:
    """Strictly positive unnormalized target, evaluated in log space."""

    log_mass: Callable[[np.ndarray], float]
    dim: int

    @classmethod
    def from_dense_pmf(cls, pmf: DensePmf) -> "TargetDensity":
        if pmf.probs.min() <= 0.0:
            raise ValueError("the target must be strictly positive everywhere")
        logs = np.log(pmf.probs)
        return cls(lambda g, _l=logs, _d=pmf.dim: float(_l[_index(g, _d)]), pmf.dim)

    @classmethod
    def from_quadexp(cls, family) -> "TargetDensity":
        # The quadratic form alone is a valid unnormalized log mass, so
        # this works at any dimension.
        return cls(lambda g: family.quad_form(as_binary_vector(g, family.dim)), family.dim)


def _index(gamma, dim: int) -> int:
    g = as_binary_vector(gamma, dim)
    return int(np.sum((g != 0) * (1 << np.arange(dim, dtype=np.int64))))


def acceptance(target: TargetDensity, current, candidate,
               prop_current: float, prop_candidate: float) -> float:
    """Acceptance probability of an independence proposal move.

    ``min(1, [target(candidate) * q(current)] / [target(current) *
    q(candidate)])`` computed in log space.  Zero proposal mass at either
    state violates the sampler's contract and raises.
    """
    if prop_current <= 0.0 or prop_candidate <= 0.0:
        raise ValueError("proposal mass must be strictly positive at both states")
    log_ratio = (
        target.log_mass(candidate)
        + math.log(prop_current)
        - target.log_mass(current)
        - math.log(prop_candidate)
    )
    return math.exp(min(log_ratio, 0.0))


@dataclass(frozen=True)
class ChainStats:
    """Summary of one chain run."""

    acceptance_rate: float
    lag1_autocov: np.ndarray
    n_steps: int
    burn_in: int

    def to_dict(self) -> dict:
        return {
            "acceptance_rate": self.acceptance_rate,
            "lag1_autocov": [[float(v) for v in row] for row in self.lag1_autocov],
            "n_steps": self.n_steps,
            "burn_in": self.burn_in,
        }


def run_chain(target: TargetDensity, proposal, steps: int, rng: np.random.Generator,
              *, burn_in: int | None = None):
    """Run an independence sampler and return ``(samples, ChainStats)``.

    ``proposal`` must offer ``sample(rng) -> (x, p)`` and ``pmf(x)``;
    sequential-conditionals and quadratic families qualify, dense tables
    do too.  Burn-in defaults to ten percent of the requested steps and
    is excluded from the returned samples and statistics.
    """
    if steps < 1:
        raise ValueError("step count must be >= 1")
    if burn_in is None:
        burn_in = steps // 10
    if burn_in >= steps:
        raise ValueError("burn-in must leave at least one retained step")
    state, state_prop = proposal.sample(rng)
    kept = np.empty((steps - burn_in, target.dim))
    accepted = 0
    for step in range(steps):
        candidate, cand_prop = proposal.sample(rng)
        if rng.random() < acceptance(target, state, candidate, state_prop, cand_prop):
            state, state_prop = candidate, cand_prop
            accepted += 1
        if step >= burn_in:
            kept[step - burn_in] = state
    m_hat = kept.mean(axis=0)
    if kept.shape[0] > 1:
        lag1 = kept[1:].T @ kept[:-1] / (kept.shape[0] - 1) - np.outer(m_hat, m_hat)
    else:
        lag1 = np.zeros((target.dim, target.dim))
    stats = ChainStats(accepted / steps, lag1, steps, burn_in)
    return kept, stats


# ---------------------------------------------------------------------------
# Exact kernel analysis at small dimensions
# ---------------------------------------------------------------------------


def enumerate_kernel(target: DensePmf, proposal: DensePmf) -> np.ndarray:
    """Full transition matrix ``K[x, y] = P(next = y | current = x)``.

    Off-diagonal mass is proposal times acceptance; the rejected mass
    sits on the diagonal, so every row sums to one.
    """
    if target.dim != proposal.dim:
        raise ValueError("dimension mismatch")
    if target.dim > 10:
        raise ValueError("kernel enumeration is quadratic in the table size; dim > 10 refused")
    pi = target.probs
    q = proposal.probs
    if pi.min() <= 0.0 or q.min() <= 0.0:
        raise ValueError("kernel enumeration needs strictly positive target and proposal")
    # ratio[x, y] = pi(y) q(x) / (pi(x) q(y)), acceptance is its cap at one
    ratio = (pi[None, :] * q[:, None]) / (pi[:, None] * q[None, :])
    lam = np.minimum(1.0, ratio)
    K = lam * q[None, :]
    np.fill_diagonal(K, 0.0)
    np.fill_diagonal(K, 1.0 - K.sum(axis=1))
    return K


@dataclass(frozen=True)
class AutocovCheck:
    """Pieces of the one-step auto-covariance decomposition."""

    lhs: np.ndarray
    structural: np.ndarray
    residual: np.ndarray
    bound: float

    @property
    def within_bound(self) -> bool:
        return bool(np.abs(self.residual).max() <= self.bound + 1e-10)


def autocov_decomposition_check(target: DensePmf, proposal: DensePmf) -> AutocovCheck:
    """Exact one-step auto-covariance of the kernel and its decomposition.

    With a common mean vector, the auto-covariance equals half the gap
    between the target and proposal cross-moment matrices plus a
    remainder whose entries are bounded by the l1 distance of the two
    distributions.  Mean mismatch beyond 1e-10 is a precondition error.
    """
    if target.dim != proposal.dim:
        raise ValueError("dimension mismatch")
    if target.dim > 6:
        raise ValueError("decomposition check enumerates pairs of states; dim > 6 refused")
    gap = float(np.abs(target.mean() - proposal.mean()).max())
    if gap > 1e-10:
        raise ValueError(f"the decomposition assumes a common mean; largest gap {gap:g}")
    K = enumerate_kernel(target, proposal)
    S = state_table(target.dim)
    pi = target.probs
    m = target.mean()
    W = pi[:, None] * K
    # E[next_i * current_j] with next indexed by columns of K
    joint = S.T @ W.T @ S
    lhs = joint - np.outer(m, m)
    structural = (target.cross_moments() - proposal.cross_moments()) / 2.0
    residual = lhs - structural
    return AutocovCheck(lhs, structural, residual, target.l1_distance(proposal))
