"""Velocity fields, initial data and exact solutions for the benchmark suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class VelocityField:
    """Prescribed velocity ``(a, b)``; ``b`` is None in 1D.

    ``a`` and ``b`` take ``(x, t)`` in 1D and ``(x, y, t)`` in 2D and must
    broadcast over arrays.  ``periodic`` marks fields that are periodic on the
    problem's domain, which lets the stepper trace each grid node once.
    """

    name: str
    a: Callable
    b: Callable | None = None
    divergence_free: bool = True
    period: float | None = None
    periodic: bool = True

    @property
    def ndim(self) -> int:
        return 1 if self.b is None else 2

    def velocity(self, pts: np.ndarray, t: float) -> np.ndarray:
        """Velocity at points of shape (n, ndim)."""
        if self.b is None:
            return np.asarray(self.a(pts[:, 0], t), dtype=float).reshape(-1, 1) * np.ones((len(pts), 1))
        x, y = pts[:, 0], pts[:, 1]
        out = np.empty_like(pts, dtype=float)
        out[:, 0] = self.a(x, y, t)
        out[:, 1] = self.b(x, y, t)
        return out


@dataclass(frozen=True)
class BenchmarkProblem:
    """A transport test case.

    ``norm_measure`` is the measure that integrated L1/L2 errors are divided
    by when reporting (the domain area when None); the rotation tests on
    [-2pi, 2pi]^2 are reported per (2pi)^2 to stay comparable with the
    published tables.
    """

    name: str
    field: VelocityField
    u0: Callable
    domain: tuple[float, ...]
    t_final: float
    exact: Callable | None = None
    relative_errors: bool = False
    norm_measure: float | None = None
    description: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def ndim(self) -> int:
        return self.field.ndim


def evaluate_field(f: VelocityField, p, t: float) -> np.ndarray:
    """Velocity vector at a single point (scalar or 2-vector ``p``)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return f.velocity(p.reshape(1, -1), t)[0]


def _const(c):
    def fn(*args):
        return np.full(np.broadcast(*args[:-1]).shape, float(c))
    return fn


def _at_period(u0, period):
    """Exact solution known only at t = 0 and t = period (reversing flows)."""
    def exact(*args):
        t = args[-1]
        if not (abs(t) < 1e-12 or abs(t - period) < 1e-12 * max(1.0, period)):
            raise ValueError(f"exact solution only available at t=0 or t={period}, got {t}")
        return u0(*args[:-1])
    return exact


# ---- 1D -------------------------------------------------------------------

def _varcoef_exact(x, t):
    # sin(2 atan(s tan(x/2))) / sin(x) == s / (cos^2(x/2) + s^2 sin^2(x/2)), s = e^{-t};
    # the right-hand form has no 0/0 at sin(x) = 0.
    s = np.exp(-t)
    c2 = np.cos(0.5 * x) ** 2
    return s / (c2 + s * s * (1.0 - c2))


def _linear1d():
    f = VelocityField("linear1d", a=_const(1.0))
    return BenchmarkProblem(
        "linear1d", f, u0=np.sin, domain=(0.0, 2 * PI), t_final=20.0,
        exact=lambda x, t: np.sin(x - t),
        description="u_t + u_x = 0, u0 = sin x")


def _varcoef1d():
    f = VelocityField("varcoef1d", a=lambda x, t: np.sin(x), divergence_free=False)
    return BenchmarkProblem(
        "varcoef1d", f, u0=lambda x: np.ones_like(np.asarray(x, float)),
        domain=(0.0, 2 * PI), t_final=1.0, exact=_varcoef_exact,
        description="u_t + (sin(x) u)_x = 0, u0 = 1")


# ---- 2D -------------------------------------------------------------------

def _linear2d():
    f = VelocityField("linear2d", a=_const(1.0), b=_const(1.0), period=PI)
    return BenchmarkProblem(
        "linear2d", f, u0=lambda x, y: np.sin(x + y), domain=(0.0, 2 * PI, 0.0, 2 * PI),
        t_final=PI, exact=lambda x, y, t: np.sin(x + y - 2.0 * t),
        description="u_t + u_x + u_y = 0, u0 = sin(x+y)")


def _rigid_field():
    return VelocityField("rigid", a=lambda x, y, t: -np.asarray(y, float) + 0.0 * x,
                         b=lambda x, y, t: np.asarray(x, float) + 0.0 * y,
                         period=2 * PI, periodic=False)


def _gaussian(x, y):
    return np.exp(-x * x - y * y)


def _rigid2d():
    return BenchmarkProblem(
        "rigid2d", _rigid_field(), u0=_gaussian, domain=(-2 * PI, 2 * PI, -2 * PI, 2 * PI),
        t_final=2 * PI, exact=lambda x, y, t: _gaussian(x, y),
        norm_measure=(2 * PI) ** 2,
        description="u_t - (y u)_x + (x u)_y = 0, u0 = exp(-x^2-y^2)")


SHAPE_RADIUS = 0.3 * PI
SHAPE_ORBIT = PI


def rotation_shapes(x, y):
    """Slotted disk (top), cone (bottom) and smooth hump (left) on [-2pi, 2pi]^2."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r0 = SHAPE_RADIUS
    out = np.zeros(np.broadcast(x, y).shape)

    # slotted disk centred at angle 90 deg; slot of width r0*2/3 opening downward
    xd, yd = 0.0, SHAPE_ORBIT
    rd = np.hypot(x - xd, y - yd)
    slot = (np.abs(x - xd) < r0 / 3.0) & (y < yd + 2.0 * r0 / 3.0)
    out = np.where((rd <= r0) & ~slot, 1.0, out)

    # cone at angle 270 deg
    xc, yc = 0.0, -SHAPE_ORBIT
    rc = np.hypot(x - xc, y - yc) / r0
    out = np.where(rc <= 1.0, 1.0 - rc, out)

    # hump at angle 180 deg
    xh, yh = -SHAPE_ORBIT, 0.0
    rh = np.hypot(x - xh, y - yh) / r0
    out = np.where(rh <= 1.0, 0.25 * (1.0 + np.cos(PI * np.minimum(rh, 1.0))), out)
    return out


def _rigid2d_shapes():
    return BenchmarkProblem(
        "rigid2d_shapes", _rigid_field(), u0=rotation_shapes,
        domain=(-2 * PI, 2 * PI, -2 * PI, 2 * PI), t_final=2 * PI,
        exact=_at_period(rotation_shapes, 2 * PI), norm_measure=(2 * PI) ** 2,
        description="rigid rotation of slotted disk, cone and hump")


def swirl_field(g: Callable[[float], float], name: str, period=None) -> VelocityField:
    def a(x, y, t):
        return -np.cos(0.5 * x) ** 2 * np.sin(y) * g(t)

    def b(x, y, t):
        return np.sin(x) * np.cos(0.5 * y) ** 2 * g(t)

    return VelocityField(name, a=a, b=b, period=period)


SWIRL_T = 1.5


def cosine_bell(x, y):
    r0 = 0.3 * PI
    r = np.hypot(x - 0.3 * PI, y - 0.0)
    return np.where(r < r0, r0 * np.cos(0.5 * PI * np.minimum(r, r0) / r0) ** 6, 0.0)


def _swirl_cos():
    T = SWIRL_T
    f = swirl_field(lambda t: np.cos(PI * t / T) * PI, "swirl_cos", period=T)
    return BenchmarkProblem(
        "swirl_cos", f, u0=cosine_bell, domain=(-PI, PI, -PI, PI), t_final=T,
        exact=_at_period(cosine_bell, T),
        description="swirling deformation, g(t) = pi cos(pi t / T), cosine bell")


def disk_indicator(x, y):
    r = np.hypot(x - PI, y - PI)
    return np.where(r <= 8.0 * PI / 5.0, 1.0, 0.0)


def _swirl_g1():
    f = swirl_field(lambda t: 1.0, "swirl_g1")
    return BenchmarkProblem(
        "swirl_g1", f, u0=disk_indicator, domain=(-PI, PI, -PI, PI), t_final=5 * PI,
        exact=None, description="steady swirl, g(t) = 1, disk indicator")


BLOSSEY_T = 2.0


def blossey_speed(r, t, T=BLOSSEY_T):
    """Tangential speed a_theta(r, t); the deformation term reverses with cos(2 pi t / T)."""
    s = (4.0 * r) ** 6
    return 4.0 * PI * r / T * (1.0 - np.cos(2.0 * PI * t / T) * (1.0 - s) / (1.0 + s))


def _blossey_components(x, y, t, T):
    dxr = np.asarray(x, float) - 0.5
    dyr = np.asarray(y, float) - 0.5
    r = np.hypot(dxr, dyr)
    # a_theta / r is finite at r = 0 (a_theta is O(r))
    s = (4.0 * r) ** 6
    omega = 4.0 * PI / T * (1.0 - np.cos(2.0 * PI * t / T) * (1.0 - s) / (1.0 + s))
    return -omega * dyr, omega * dxr


def blossey_bell(x, y):
    rt = 5.0 * np.hypot(x - 0.3, y - 0.5)
    return np.where(rt <= 1.0, (0.5 * (1.0 + np.cos(PI * np.minimum(rt, 1.0)))) ** 2, 0.0)


def _blossey():
    T = BLOSSEY_T
    f = VelocityField("blossey",
                      a=lambda x, y, t: _blossey_components(x, y, t, T)[0],
                      b=lambda x, y, t: _blossey_components(x, y, t, T)[1],
                      period=T, periodic=False)
    return BenchmarkProblem(
        "blossey", f, u0=blossey_bell, domain=(0.0, 1.0, 0.0, 1.0), t_final=T,
        exact=_at_period(blossey_bell, T),
        description="radially varying swirl that reverses at T/2")


_REGISTRY = {
    "linear1d": _linear1d,
    "varcoef1d": _varcoef1d,
    "linear2d": _linear2d,
    "rigid2d": _rigid2d,
    "rigid2d_shapes": _rigid2d_shapes,
    "swirl_cos": _swirl_cos,
    "swirl_g1": _swirl_g1,
    "blossey": _blossey,
}

PROBLEM_NAMES = tuple(_REGISTRY)


def catalog(name: str) -> BenchmarkProblem:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}") from None
