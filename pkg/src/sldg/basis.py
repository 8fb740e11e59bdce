"""Orthonormal modal Legendre bases on the reference cell.

The basis is orthonormal under the *averaged* reference inner product
``(f, g) = |K|^{-1} \\int_K f g``, so the first mode is identically one, its
coefficient is the cell average, and the physical mass matrix is
``|cell| * I``.  2D uses the total-degree space P^k, ordered by degree:
``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

MAX_DEGREE = {1: 3, 2: 2}


def legendre_orthonormal(n: int, x):
    """sqrt(2n+1) P_n(x) for n <= 3."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    if n == 1:
        return np.sqrt(3.0) * x
    if n == 2:
        return np.sqrt(5.0) * 0.5 * (3.0 * x * x - 1.0)
    if n == 3:
        return np.sqrt(7.0) * 0.5 * (5.0 * x**3 - 3.0 * x)
    raise InvalidInputError(f"Legendre degree {n} not supported")


def total_degree_exponents(k: int) -> list[tuple[int, int]]:
    return [(d - b, b) for d in range(k + 1) for b in range(d + 1)]


@dataclass(frozen=True)
class BasisSpec:
    degree: int
    ndim: int = 2

    def __post_init__(self):
        if self.ndim not in (1, 2):
            raise InvalidInputError(f"ndim must be 1 or 2, got {self.ndim}")
        if not 0 <= self.degree <= MAX_DEGREE[self.ndim]:
            raise InvalidInputError(
                f"degree {self.degree} unsupported in {self.ndim}D "
                f"(max {MAX_DEGREE[self.ndim]})")

    @property
    def k(self) -> int:
        return self.degree

    @property
    def dim(self) -> int:
        k = self.degree
        return k + 1 if self.ndim == 1 else (k + 1) * (k + 2) // 2

    @cached_property
    def exponents(self) -> list[tuple[int, ...]]:
        if self.ndim == 1:
            return [(a,) for a in range(self.degree + 1)]
        return total_degree_exponents(self.degree)

    def values(self, *ref) -> np.ndarray:
        """Basis values at reference coordinates; shape ``ref.shape + (dim,)``."""
        if len(ref) != self.ndim:
            raise InvalidInputError(f"expected {self.ndim} reference coordinates")
        if self.ndim == 1:
            xi = np.asarray(ref[0], dtype=float)
            return np.stack([legendre_orthonormal(a, xi) for (a,) in self.exponents], axis=-1)
        xi, eta = np.broadcast_arrays(np.asarray(ref[0], float), np.asarray(ref[1], float))
        lx = [legendre_orthonormal(a, xi) for a in range(self.degree + 1)]
        ly = [legendre_orthonormal(b, eta) for b in range(self.degree + 1)]
        return np.stack([lx[a] * ly[b] for a, b in self.exponents], axis=-1)
