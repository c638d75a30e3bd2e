"""Binary families obtained by thresholding a correlated Gaussian vector.

Component ``i`` is one when the latent normal variable falls below a
threshold chosen to match the requested mean.  Pairwise latent
correlations are solved one Newton iteration at a time against the
bivariate normal CDF; if the assembled matrix fails to be positive
definite it is shrunk toward the identity just enough to fix it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .moments import validate_cross_moments

_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

#: Latent correlations are clamped inside the open interval at this margin.
_RHO_CLAMP = 1.0 - 1e-9


def norm_cdf(x):
    """Standard normal CDF."""
    return ndtr(x)


def norm_ppf(p):
    """Standard normal quantile function."""
    return ndtri(p)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT_TWO_PI


def bvn_pdf(h: float, k: float, rho: float) -> float:
    """Standard bivariate normal density at ``(h, k)`` with correlation ``rho``."""
    om = (1.0 - rho) * (1.0 + rho)
    if om <= 0.0:
        raise ValueError("the density needs |rho| < 1")
    z = (h * h - 2.0 * rho * h * k + k * k) / om
    return math.exp(-0.5 * z) / (2.0 * math.pi * math.sqrt(om))


def _bvn_upper(dh: float, dk: float, r: float) -> float:
    # P(X > dh, Y > dk); single-integral reduction with 20-node
    # Gauss-Legendre, switching formulas at |r| = 0.925 where the plain
    # arcsine integrand degenerates.
    h, k = dh, dk
    hk = h * k
    bvn = 0.0
    if abs(r) < 0.925:
        if r != 0.0:
            hs = (h * h + k * k) / 2.0
            asr = math.asin(r)
            for x, w in zip(_GL_NODES, _GL_WEIGHTS):
                sn = math.sin(asr * (1.0 + x) / 2.0)
                bvn += w * math.exp((sn * hk - hs) / (1.0 - sn * sn))
            bvn = bvn * asr / (4.0 * math.pi)
        bvn += float(ndtr(-h)) * float(ndtr(-k))
        return bvn
    if r < 0.0:
        k = -k
        hk = -hk
    if abs(r) < 1.0:
        a_sq = (1.0 - r) * (1.0 + r)
        a = math.sqrt(a_sq)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        asr = -(bs / a_sq + hk) / 2.0
        if asr > -100.0:
            bvn = a * math.exp(asr) * (
                1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0
            )
        if -hk < 100.0:
            b = math.sqrt(bs)
            sp = _SQRT_TWO_PI * float(ndtr(-b / a))
            bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
        half = a / 2.0
        for x, w in zip(_GL_NODES, _GL_WEIGHTS):
            xs = (half * (1.0 + x)) ** 2
            rs = math.sqrt(1.0 - xs)
            asr = -(bs / xs + hk) / 2.0
            if asr > -100.0:
                sp = 1.0 + c * xs * (1.0 + d * xs)
                ep = math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                bvn += half * w * math.exp(asr) * (ep - sp)
        bvn = -bvn / (2.0 * math.pi)
    if r > 0.0:
        bvn += float(ndtr(-max(h, k)))
    else:
        bvn = -bvn
        if k > h:
            bvn += float(ndtr(k)) - float(ndtr(h))
    return min(1.0, max(0.0, bvn))


def bvn_cdf(h: float, k: float, rho: float) -> float:
    """``P(X <= h, Y <= k)`` for a standard bivariate normal pair.

    Absolute accuracy is well below 1e-7 over the whole correlation
    range; ``|rho| >= 1`` falls back to the comonotone and antithetic
    limit formulas.
    """
    h = float(h)
    k = float(k)
    rho = float(rho)
    if not (math.isfinite(h) and math.isfinite(k) and math.isfinite(rho)):
        raise ValueError("bvn_cdf needs finite arguments")
    if rho >= 1.0:
        return min(float(ndtr(h)), float(ndtr(k)))
    if rho <= -1.0:
        return max(0.0, float(ndtr(h)) + float(ndtr(k)) - 1.0)
    return _bvn_upper(-h, -k, rho)


def solve_pair_correlation(
    m_i: float, m_j: float, target: float, *, tol: float = 1e-8, max_iterations: int = 100
) -> tuple[float, bool]:
    """Latent correlation matching one pairwise cross moment.

    Solves ``bvn_cdf(a_i, a_j, sigma) = target`` (thresholds from the
    means) by Newton steps with the bivariate density as derivative,
    safeguarded by bisection on the bracketing interval.  Returns
    ``(sigma, boundary)`` where ``boundary`` marks targets at or beyond
    the attainable range, with sigma clamped to ``+-(1 - 1e-9)``.
    """
    a_i = float(ndtri(m_i))
    a_j = float(ndtri(m_j))
    lo, hi = -_RHO_CLAMP, _RHO_CLAMP
    g_lo = bvn_cdf(a_i, a_j, lo) - target
    g_hi = bvn_cdf(a_i, a_j, hi) - target
    if g_lo >= 0.0:
        return (lo, True) if g_lo > tol else (lo, False)
    if g_hi <= 0.0:
        return (hi, True) if g_hi < -tol else (hi, False)

    s_i = math.sqrt(m_i * (1.0 - m_i))
    s_j = math.sqrt(m_j * (1.0 - m_j))
    sigma = (target - m_i * m_j) / (s_i * s_j)
    sigma = min(max(sigma, -0.99), 0.99)
    for _ in range(max_iterations):
        g = bvn_cdf(a_i, a_j, sigma) - target
        if abs(g) <= tol:
            return sigma, False
        if g > 0.0:
            hi = sigma
        else:
            lo = sigma
        deriv = bvn_pdf(a_i, a_j, sigma)
        if deriv > 1e-15:
            nxt = sigma - g / deriv
        else:
            nxt = (lo + hi) / 2.0
        if not (lo < nxt < hi):
            nxt = (lo + hi) / 2.0
        sigma = nxt
    return sigma, abs(bvn_cdf(a_i, a_j, sigma) - target) > tol


def repair_correlation(Sigma, *, eig_floor: float = 1e-10) -> tuple[np.ndarray, bool, float]:
    """Shrink a symmetric unit-diagonal matrix toward the identity until PD.

    Returns ``(Sigma_star, repaired, shift)`` with
    ``Sigma_star = (Sigma + |shift| I) / (1 + |shift|)`` and the shift
    placed just below the smallest eigenvalue; the diagonal stays exactly
    one and off-diagonals shrink by the common factor ``1/(1+|shift|)``.
    """
    S = np.asarray(Sigma, dtype=float)
    min_eig = float(np.linalg.eigvalsh((S + S.T) / 2.0)[0])
    if min_eig >= eig_floor:
        return S, False, 0.0
    shift = min_eig - 1e-8
    out = (S + abs(shift) * np.eye(S.shape[0])) / (1.0 + abs(shift))
    np.fill_diagonal(out, 1.0)
    return out, True, shift


class GaussianCopulaFamily:
    """Dichotomized-Gaussian binary family.

    ``thresholds`` fix the means, ``latent_corr`` the dependence.  The
    Cholesky factor of the latent correlation is cached for sampling.
    Point-wise probabilities of whole vectors are deliberately not
    offered (they are d-dimensional orthant integrals); closed-form
    pairwise moments via :meth:`moments` cover what the benchmark needs.
    """

    kind_tag = "gaussian-copula"

    __slots__ = ("thresholds", "latent_corr", "repaired", "shift", "boundary_pairs",
                 "_factor")

    def __init__(self, thresholds, latent_corr, *, repaired: bool = False,
                 shift: float = 0.0, boundary_pairs: tuple = ()):
        self.thresholds = np.array(thresholds, dtype=float)
        self.latent_corr = np.array(latent_corr, dtype=float)
        d = self.thresholds.size
        if self.latent_corr.shape != (d, d):
            raise ValueError("latent correlation shape does not match thresholds")
        if np.abs(np.diag(self.latent_corr) - 1.0).max() > 1e-12:
            raise ValueError("latent correlation must have a unit diagonal")
        self.thresholds.setflags(write=False)
        self.latent_corr.setflags(write=False)
        self.repaired = bool(repaired)
        self.shift = float(shift)
        self.boundary_pairs = tuple(boundary_pairs)
        self._factor = None

    @property
    def dim(self) -> int:
        return self.thresholds.size

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular square root of the latent correlation."""
        if self._factor is None:
            self._factor = np.linalg.cholesky(self.latent_corr)
        return self._factor

    def mean(self) -> np.ndarray:
        return ndtr(self.thresholds)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.dim)
        return (self.factor @ z <= self.thresholds).astype(float)

    def sample_many(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("sample count must be >= 1")
        z = rng.standard_normal((n, self.dim))
        return (z @ self.factor.T <= self.thresholds).astype(float)

    def empirical_moments(self, n: int, rng: np.random.Generator,
                          chunk_size: int = 1 << 17) -> np.ndarray:
        acc = np.zeros((self.dim, self.dim))
        left = n
        while left > 0:
            take = min(chunk_size, left)
            X = self.sample_many(take, rng)
            acc += X.T @ X
            left -= take
        M = acc / n
        return (M + M.T) / 2.0

    def moments(self) -> np.ndarray:
        """Exact cross-moment matrix (bivariate CDF per pair, no sampling)."""
        d = self.dim
        M = np.empty((d, d))
        np.fill_diagonal(M, ndtr(self.thresholds))
        for i in range(d):
            for j in range(i + 1, d):
                v = bvn_cdf(self.thresholds[i], self.thresholds[j],
                            self.latent_corr[i, j])
                M[i, j] = M[j, i] = v
        return M

    def to_dict(self) -> dict:
        return {
            "kind": self.kind_tag,
            "dim": self.dim,
            "thresholds": [float(v) for v in self.thresholds],
            "latent_corr": [[float(v) for v in row] for row in self.latent_corr],
            "repaired": self.repaired,
            "shift": self.shift,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianCopulaFamily":
        return cls(
            payload["thresholds"],
            payload["latent_corr"],
            repaired=bool(payload.get("repaired", False)),
            shift=float(payload.get("shift", 0.0)),
        )


def fit_gc(M, *, tol: float = 1e-8) -> GaussianCopulaFamily:
    """Fit the dichotomized-Gaussian family to a cross-moment matrix.

    Thresholds are the normal quantiles of the diagonal; each latent
    pairwise correlation solves the corresponding bivariate CDF equation
    to ``tol``.  Pairs whose target sits at the attainable boundary are
    clamped and listed in ``boundary_pairs``.  If the assembled latent
    matrix is not positive definite it is repaired by the common-shrink
    rule, trading pairwise exactness for a usable factor; the ``repaired``
    flag and ``shift`` record that.
    """
    M = np.asarray(M, dtype=float)
    report = validate_cross_moments(M)
    if not report.ok:
        raise ValueError("target cross-moment matrix is infeasible: "
                         + "; ".join(report.violations))
    d = M.shape[0]
    m = np.diag(M)
    thresholds = ndtri(m)
    Sigma = np.eye(d)
    boundary = []
    for i in range(d):
        for j in range(i + 1, d):
            sigma, at_boundary = solve_pair_correlation(m[i], m[j], M[i, j], tol=tol)
            Sigma[i, j] = Sigma[j, i] = sigma
            if at_boundary:
                boundary.append((i, j))
    Sigma, repaired, shift = repair_correlation(Sigma)
    return GaussianCopulaFamily(thresholds, Sigma, repaired=repaired, shift=shift,
                                boundary_pairs=tuple(boundary))
