"""Link functions mapping a real linear predictor to a success probability."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import exp1, ndtr, ndtri

#: Beyond this predictor magnitude the logistic response saturates to {0, 1}
#: exactly; double precision cannot distinguish it from the limit anyway.
LOGISTIC_SATURATION = 35.0


@dataclass(frozen=True)
class LinkFunction:
    """A monotone response function with inverse, derivative and potential.

    ``bijective`` marks links whose inverse is exact on (0, 1); the
    truncated linear link is flat outside [0, 1] and is flagged
    non-bijective, with the identity as its section on the linear part.
    ``potential`` is an antiderivative of the response; moment matching
    minimizes the convex function it induces, which is what makes the
    Newton line search globally safe.  All callables accept scalars or
    arrays.
    """

    name: str
    bijective: bool
    _eval: Callable = field(repr=False)
    _inverse: Callable = field(repr=False)
    _deriv: Callable = field(repr=False)
    _potential: Callable = field(repr=False)

    def __call__(self, x):
        return self._eval(np.asarray(x, dtype=float))

    def inverse(self, p):
        return self._inverse(np.asarray(p, dtype=float))

    def deriv(self, x):
        return self._deriv(np.asarray(x, dtype=float))

    def potential(self, x):
        return self._potential(np.asarray(x, dtype=float))


def _logistic_eval(x):
    with np.errstate(over="ignore"):
        core = 1.0 / (1.0 + np.exp(-x))
    return np.where(x > LOGISTIC_SATURATION, 1.0,
                    np.where(x < -LOGISTIC_SATURATION, 0.0, core))


def _logistic_inverse(p):
    return np.log(p) - np.log1p(-p)


def _logistic_deriv(x):
    e = _logistic_eval(x)
    return e * (1.0 - e)


def _softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _probit_deriv(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _probit_potential(x):
    return x * ndtr(x) + _probit_deriv(x)


def _cloglog_eval(x):
    with np.errstate(over="ignore"):
        return -np.expm1(-np.exp(x))


def _cloglog_inverse(p):
    return np.log(-np.log1p(-p))


def _cloglog_deriv(x):
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(x - np.exp(x))


def _cloglog_potential(x):
    with np.errstate(over="ignore", under="ignore"):
        z = np.exp(x)
    out = np.where(z > 0.0, x + exp1(np.where(z > 0.0, z, 1.0)), -np.euler_gamma)
    return out


def _trunc_linear_eval(x):
    return np.clip(x, 0.0, 1.0)


def _trunc_linear_deriv(x):
    # Flat outside the unit interval; the boundary counts as flat so that
    # Newton steps never move along a clamp.
    return np.where((x > 0.0) & (x < 1.0), 1.0, 0.0)


def _trunc_linear_potential(x):
    c = np.clip(x, 0.0, 1.0)
    return c * x - c * c / 2.0


LOGISTIC = LinkFunction("logistic", True, _logistic_eval, _logistic_inverse,
                        _logistic_deriv, _softplus)
PROBIT = LinkFunction("probit", True, lambda x: ndtr(x), lambda p: ndtri(p),
                      _probit_deriv, _probit_potential)
CLOGLOG = LinkFunction("cloglog", True, _cloglog_eval, _cloglog_inverse,
                       _cloglog_deriv, _cloglog_potential)
TRUNCATED_LINEAR = LinkFunction(
    "truncated-linear", False, _trunc_linear_eval, lambda p: np.asarray(p, dtype=float),
    _trunc_linear_deriv, _trunc_linear_potential,
)

LINKS = {
    "logistic": LOGISTIC,
    "probit": PROBIT,
    "cloglog": CLOGLOG,
    "truncated-linear": TRUNCATED_LINEAR,
    "linear": TRUNCATED_LINEAR,
}


def get_link(name: str) -> LinkFunction:
    try:
        return LINKS[name]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; choose from {sorted(set(LINKS))}") from None
