"""File formats: the shared matrix text format and family JSON."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .conditionals import ConditionalsFamily
from .gaussian import GaussianCopulaFamily
from .quadexp import QuadExpFamily

_FAMILY_KINDS = {
    ConditionalsFamily.kind_tag: ConditionalsFamily,
    GaussianCopulaFamily.kind_tag: GaussianCopulaFamily,
    QuadExpFamily.kind_tag: QuadExpFamily,
}


def write_matrix_text(path, M) -> None:
    """Write a matrix as a dimension line followed by whitespace rows.

    Floats are written with ``repr`` so a round trip is bit exact.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    lines = [str(M.shape[0])]
    lines += [" ".join(repr(float(v)) for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_text(path) -> np.ndarray:
    """Parse the matrix text format; asymmetry beyond 1e-9 is rejected."""
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty matrix file")
    d = int(tokens[0])
    if d < 1:
        raise ValueError(f"{path}: dimension must be >= 1")
    values = tokens[1:]
    if len(values) != d * d:
        raise ValueError(f"{path}: expected {d * d} entries, found {len(values)}")
    M = np.array([float(v) for v in values]).reshape(d, d)
    if np.abs(M - M.T).max() > 1e-9:
        raise ValueError(f"{path}: matrix is asymmetric beyond 1e-9")
    return M


def save_family(path, family) -> None:
    Path(path).write_text(json.dumps(family.to_dict(), indent=2) + "\n")


def load_family(path):
    payload = json.loads(Path(path).read_text())
    kind = payload.get("kind")
    try:
        cls = _FAMILY_KINDS[kind]
    except KeyError:
        raise ValueError(f"{path}: unknown family kind {kind!r}") from None
    return cls.from_dict(payload)
