"""Vectorization helpers and the Superoperator container.

An operator X on the dim-dimensional Hilbert space is vectorized row-major,
``vec(X)[a*dim + b] = X[a, b]`` (numpy ``ravel``). With this convention
``vec(A X B) = kron(A, B.T) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1)


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim)


def spre(a: np.ndarray) -> np.ndarray:
    """Left multiplication X -> A X."""
    return np.kron(a, np.eye(a.shape[0]))


def spost(b: np.ndarray) -> np.ndarray:
    """Right multiplication X -> X B."""
    return np.kron(np.eye(b.shape[0]), b.T)


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """X -> A X B."""
    return np.kron(a, b.T)


def commutator(a: np.ndarray) -> np.ndarray:
    """X -> [A, X]."""
    return spre(a) - spost(a)


@dataclass(eq=False)
class Superoperator:
    """Dense generator acting on row-major vectorized operators.

    Entries are energies (eV); the equation of motion is
    ``d vec(rho)/dt = matrix @ vec(rho) / hbar``. ``parts`` keeps the named
    contributions (coherent, loss, dephasing) when they were retained.
    """

    dim_h: int
    matrix: np.ndarray
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.dim_h * self.dim_h
        if self.matrix.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {self.matrix.shape}")

    @property
    def shape(self):
        return self.matrix.shape

    def index(self, alpha: int, beta: int) -> int:
        return alpha * self.dim_h + beta

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Generator acting on an operator given as a dim x dim matrix."""
        return unvec(self.matrix @ vec(rho), self.dim_h)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 1))

    def restrict(self, pairs) -> np.ndarray:
        """Rows and columns for the listed (alpha, beta) pairs, in that order."""
        idx = [self.index(a, b) for a, b in pairs]
        return self.matrix[np.ix_(idx, idx)]

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if self.dim_h != other.dim_h:
            raise ValueError("dimension mismatch")
        parts = {}
        for source in (self.parts, other.parts):
            for name, m in source.items():
                parts[name] = parts[name] + m if name in parts else m
        return Superoperator(self.dim_h, self.matrix + other.matrix, parts)
