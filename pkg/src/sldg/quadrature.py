"""Gauss-Legendre and Gauss-Lobatto rules on [-1, 1]."""

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights (exact for degree 2n-1)."""
    x, w = npleg.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_lobatto(n: int) -> np.ndarray:
    """n Gauss-Lobatto nodes; n=1 returns the midpoint."""
    if n == 1:
        x = np.zeros(1)
    else:
        # interior nodes are the roots of P'_{n-1}
        c = np.zeros(n)
        c[-1] = 1.0
        inner = npleg.legroots(npleg.legder(c)) if n > 2 else np.empty(0)
        x = np.concatenate(([-1.0], np.sort(inner.real), [1.0]))
    x.setflags(write=False)
    return x


def tensor_rule(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor Gauss rule on [-1,1]^2 flattened to (n*n,) arrays."""
    x, w = gauss_legendre(n)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    return xi.ravel(), eta.ravel(), ww.ravel()
