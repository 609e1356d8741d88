"""
Zonotope and interval primitives.

A zonotope ``<c, H>`` is the set ``{c + H b : b in [-1, 1]^m}``. Only the
operations needed for error bounding are provided: Minkowski sum, linear image,
interval hull and hull-preserving order reduction. Intervals are closed scalar
ranges with inclusion-isotone arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.lo <= self.hi):
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def around(cls, value: float, radius: float) -> Interval:
        return cls(value - radius, value + radius)

    @classmethod
    def point(cls, value: float) -> Interval:
        return cls(value, value)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def issubset(self, other: Interval) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __add__(self, other: Interval | float) -> Interval:
        return interval_add(self, other)

    def __radd__(self, other: float) -> Interval:
        return interval_add(self, other)

    def __sub__(self, other: Interval | float) -> Interval:
        return interval_sub(self, other)

    def __rsub__(self, other: float) -> Interval:
        return interval_sub(_as_interval(other), self)

    def __mul__(self, other: Interval | float) -> Interval:
        return interval_mul(self, other)

    def __rmul__(self, other: float) -> Interval:
        return interval_mul(self, other)

    def __truediv__(self, other: Interval | float) -> Interval:
        return interval_div(self, other)

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def _as_interval(x: Interval | float) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(float(x), float(x))


def interval_add(a: Interval, b: Interval | float) -> Interval:
    b = _as_interval(b)
    return Interval(a.lo + b.lo, a.hi + b.hi)


def interval_sub(a: Interval, b: Interval | float) -> Interval:
    b = _as_interval(b)
    return Interval(a.lo - b.hi, a.hi - b.lo)


def interval_mul(a: Interval, b: Interval | float) -> Interval:
    b = _as_interval(b)
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(products), max(products))


def interval_scale(a: Interval, s: float) -> Interval:
    if s >= 0.0:
        return Interval(s * a.lo, s * a.hi)
    return Interval(s * a.hi, s * a.lo)


def interval_div(a: Interval, b: Interval | float) -> Interval:
    b = _as_interval(b)
    if b.lo <= 0.0 <= b.hi:
        raise ZeroDivisionError(f"division by interval containing zero: {b}")
    return interval_mul(a, Interval(1.0 / b.hi, 1.0 / b.lo))


def interval_tan(a: Interval) -> Interval:
    # tan is increasing on (-pi/2, pi/2)
    if not (-math.pi / 2 < a.lo and a.hi < math.pi / 2):
        raise ValueError(f"tan domain violation: {a}")
    return Interval(math.tan(a.lo), math.tan(a.hi))


def interval_abs_square(a: Interval) -> Interval:
    """Image of ``x -> x*|x|``, which is odd and increasing."""
    return Interval(a.lo * abs(a.lo), a.hi * abs(a.hi))


def interval_sign(a: Interval) -> Interval:
    """Interval enclosure of ``sign(x)`` for ``x`` in ``a``."""
    lo = -1.0 if a.lo < 0.0 else (0.0 if a.lo == 0.0 else 1.0)
    hi = 1.0 if a.hi > 0.0 else (0.0 if a.hi == 0.0 else -1.0)
    return Interval(lo, hi)


class Zonotope:
    """
    Zonotope ``<center, generators>``.

    Parameters
    ----------
    center : array-like, shape (n,)
        Center point.
    generators : array-like, shape (n, m)
        Generator matrix; each column is one generator. ``m`` may be zero.
    """

    __slots__ = ("center", "generators")
    __array_ufunc__ = None  # let ``ndarray @ Zonotope`` reach __rmatmul__

    def __init__(self, center: ArrayLike, generators: ArrayLike | None = None) -> None:
        c = np.asarray(center, dtype=float).reshape(-1)
        if generators is None:
            g = np.zeros((c.size, 0))
        else:
            g = np.asarray(generators, dtype=float)
            if g.ndim == 1:
                g = g.reshape(c.size, -1)
        if g.shape[0] != c.size:
            raise ValueError(
                f"generator rows ({g.shape[0]}) do not match dimension ({c.size})"
            )
        self.center = c
        self.generators = g

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def order(self) -> int:
        return self.generators.shape[1]

    def __repr__(self) -> str:
        return f"Zonotope(dim={self.dim}, order={self.order})"

    def __add__(self, other: Zonotope) -> Zonotope:
        return minkowski_sum(self, other)

    def __rmatmul__(self, mat: ArrayLike) -> Zonotope:
        return linear_image(mat, self)

    def hull(self) -> list[Interval]:
        return interval_hull(self)

    def radius(self) -> NDArray:
        """Half-widths of the interval hull."""
        return np.abs(self.generators).sum(axis=1)

    def support(self, direction: ArrayLike) -> float:
        """Support function ``max_{x in Z} <d, x>``."""
        d = np.asarray(direction, dtype=float)
        return float(d @ self.center + np.abs(d @ self.generators).sum())

    def sample(self, rng: np.random.Generator, size: int) -> NDArray:
        """Points ``c + H b`` for ``b`` uniform on the unit box, shape (size, n)."""
        b = rng.uniform(-1.0, 1.0, size=(size, self.order))
        return self.center + b @ self.generators.T


def minkowski_sum(z1: Zonotope, z2: Zonotope) -> Zonotope:
    if z1.dim != z2.dim:
        raise ValueError(f"dimension mismatch: {z1.dim} vs {z2.dim}")
    return Zonotope(z1.center + z2.center, np.hstack((z1.generators, z2.generators)))


def linear_image(mat: ArrayLike, z: Zonotope) -> Zonotope:
    m = np.atleast_2d(np.asarray(mat, dtype=float))
    if m.shape[1] != z.dim:
        raise ValueError(f"map has {m.shape[1]} columns, zonotope dimension {z.dim}")
    return Zonotope(m @ z.center, m @ z.generators)


def interval_hull(z: Zonotope) -> list[Interval]:
    r = z.radius()
    return [Interval(c - ri, c + ri) for c, ri in zip(z.center, r)]


def reduce_generators(generators: NDArray, q: int) -> NDArray:
    """
    Reduce a generator matrix to exactly ``q`` columns, keeping its interval hull.

    The ``q - n`` columns of largest Euclidean norm are kept verbatim; the rest
    are enclosed by their axis-aligned box (``n`` diagonal generators). Ties on
    the norm are broken by original column index. A matrix with at most ``q``
    columns is returned as is.
    """
    n, m = generators.shape
    if q < n:
        raise ValueError(f"reduction order q={q} below dimension n={n}")
    if m <= q:
        return generators
    norms = np.einsum("ij,ij->j", generators, generators)
    nonzero = norms > 0.0
    if not nonzero.all():
        generators = generators[:, nonzero]
        norms = norms[nonzero]
        m = norms.size
        if m <= q:
            return generators
    keep = q - n
    if keep > 0:
        # partition, then settle ties at the threshold by lowest column index
        part = np.argpartition(-norms, keep - 1)[:keep]
        threshold = norms[part].min()
        above = np.flatnonzero(norms > threshold)
        tied = np.flatnonzero(norms == threshold)[: keep - above.size]
        mask = np.zeros(m, dtype=bool)
        mask[above] = True
        mask[tied] = True
    else:
        mask = np.zeros(m, dtype=bool)
    box = np.abs(generators[:, ~mask]).sum(axis=1)
    return np.hstack((generators[:, mask], np.diag(box)))


def reduce(z: Zonotope, q: int) -> Zonotope:
    """Order reduction to ``q`` generators; the result contains ``z`` and has the same hull."""
    return Zonotope(z.center, reduce_generators(z.generators, q))


def hull_contains(hull: Sequence[Interval], point: ArrayLike) -> bool:
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.size != len(hull):
        raise ValueError(f"point dimension {p.size} does not match hull {len(hull)}")
    return all(iv.lo <= x <= iv.hi for iv, x in zip(hull, p))


def hull_arrays(z: Zonotope) -> tuple[NDArray, NDArray]:
    """Interval hull as ``(lower, upper)`` arrays."""
    r = z.radius()
    return z.center - r, z.center + r
