"""Backward characteristic tracing with a six-stage fifth-order Runge-Kutta rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, TraceFailure
from .flows import VelocityField

# Butcher's 6-stage, 5th-order tableau; the backward trace applies it with -dt.
_C = (0.0, 0.25, 0.25, 0.5, 0.75, 1.0)
_A = (
    (),
    (0.25,),
    (0.125, 0.125),
    (0.0, -0.5, 1.0),
    (3.0 / 16.0, 0.0, 0.0, 9.0 / 16.0),
    (-3.0 / 7.0, 2.0 / 7.0, 12.0 / 7.0, -12.0 / 7.0, 8.0 / 7.0),
)
_B = (7.0 / 90.0, 0.0, 32.0 / 90.0, 12.0 / 90.0, 32.0 / 90.0, 7.0 / 90.0)


@dataclass(frozen=True)
class TraceRequest:
    point: tuple
    t_next: float
    dt: float
    field: VelocityField
    substeps: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        if self.substeps < 1:
            raise InvalidInputError("substeps must be >= 1")


def _rk5_back(x, t1, h, field):
    k = []
    for s in range(6):
        xs = x
        for a, kk in zip(_A[s], k):
            if a != 0.0:
                xs = xs - (a * h) * kk
        ks = field.velocity(xs, t1 - _C[s] * h)
        if not np.all(np.isfinite(ks)):
            bad = np.argwhere(~np.isfinite(ks).all(axis=1))[0, 0]
            raise TraceFailure(f"non-finite velocity in stage {s + 1}", point=tuple(x[bad]))
        k.append(ks)
    incr = sum(b * kk for b, kk in zip(_B, k) if b != 0.0)
    return x - h * incr


def trace_points(points, t_next: float, dt: float, field: VelocityField, substeps: int = 1) -> np.ndarray:
    """Feet at ``t_next - dt`` of the characteristics through ``points`` at ``t_next``.

    ``points`` has shape (n, ndim) (or (n,) in 1D); the result has the same shape.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, field.ndim) if pts.ndim > 1 or field.ndim == 1 else pts.reshape(1, -1)
    if dt == 0:
        return pts.copy()
    h = dt / substeps
    x = flat
    t = t_next
    for _ in range(substeps):
        x = _rk5_back(x, t, h, field)
        t -= h
    return x.reshape(pts.shape)


def trace_backward(req: TraceRequest) -> np.ndarray:
    p = np.atleast_1d(np.asarray(req.point, dtype=float))
    return trace_points(p.reshape(1, -1), req.t_next, req.dt, req.field, req.substeps)[0]
