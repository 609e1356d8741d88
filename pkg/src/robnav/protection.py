"""
Protection levels from a zonotope bound on the filter estimation error.

The error bound follows the filter's own linear error dynamics::

    e- = F e+ + G w          E- = R([F E+, G W])
    e+ = (I - K H) e- - K v  E+ = R([(I - K H) E-, K V])

with ``W`` and ``V`` boxes of ``n_sigma`` standard deviations and ``R`` the
hull-preserving order reduction. Centers stay at zero, so only generator
matrices are carried.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from robnav.zonotope import Interval, Zonotope, reduce_generators

DEFAULT_E0_POSITION = (10.0, 10.0, 20.0)


@dataclass
class PlConfig:
    q: int = 4000
    n_sigma_z: float = 3.0
    e0_position: tuple[float, float, float] = DEFAULT_E0_POSITION

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError("reduction order must be positive")
        if not self.n_sigma_z > 0.0:
            raise ValueError("n_sigma_z must be positive")


class ErrorZonotope:
    """Zero-centered zonotope ``<0, E>`` bounding an error state."""

    __slots__ = ("E",)

    def __init__(self, generators: NDArray) -> None:
        self.E = np.asarray(generators, dtype=float)

    @property
    def dim(self) -> int:
        return self.E.shape[0]

    @property
    def order(self) -> int:
        return self.E.shape[1]

    @property
    def center(self) -> NDArray:
        return np.zeros(self.dim)

    def as_zonotope(self) -> Zonotope:
        return Zonotope(np.zeros(self.dim), self.E)

    def radius(self) -> NDArray:
        return np.abs(self.E).sum(axis=1)

    def select(self, rows: Sequence[int]) -> ErrorZonotope:
        return ErrorZonotope(self.E[list(rows), :])

    @classmethod
    def diagonal(cls, half_widths: NDArray) -> ErrorZonotope:
        return cls(np.diag(np.asarray(half_widths, dtype=float)))


def noise_zonotopes(Q: NDArray, R: NDArray, n_sigma_z: float) -> tuple[Zonotope, Zonotope]:
    """Diagonal boxes of ``n_sigma_z`` standard deviations for process and measurement noise."""
    return _noise_box(Q, n_sigma_z), _noise_box(R, n_sigma_z)


def _noise_box(C: NDArray, n_sigma: float) -> Zonotope:
    d = np.diag(np.atleast_2d(C))
    if np.any(d < 0.0):
        raise ValueError("negative variance on the diagonal")
    return Zonotope(np.zeros(d.size), np.diag(n_sigma * np.sqrt(d)))


def initial_error_zonotope(sigma0: NDArray, cfg: PlConfig, position_rows=(0, 1, 2)) -> ErrorZonotope:
    """Diagonal start bound: fixed position box, ``n_sigma_z`` x sigma0 elsewhere."""
    half = cfg.n_sigma_z * np.asarray(sigma0, dtype=float)
    half[list(position_rows)] = cfg.e0_position
    return ErrorZonotope.diagonal(half)


def propagate_error_zonotope(
    E: ErrorZonotope, F: NDArray, G: NDArray, W: Zonotope | NDArray, q: int
) -> ErrorZonotope:
    Wg = W.generators if isinstance(W, Zonotope) else np.asarray(W)
    return ErrorZonotope(reduce_generators(np.hstack((F @ E.E, G @ Wg)), q))


def update_error_zonotope(
    E: ErrorZonotope, K: NDArray, H: NDArray, V: Zonotope | NDArray, q: int
) -> ErrorZonotope:
    Vg = V.generators if isinstance(V, Zonotope) else np.asarray(V)
    A = np.eye(E.dim) - K @ H
    return ErrorZonotope(reduce_generators(np.hstack((A @ E.E, K @ Vg)), q))


def protection_level(E: ErrorZonotope, selector: Sequence[int] | None = None) -> list[Interval]:
    """Interval hull of the selected error dimensions (symmetric about zero)."""
    r = E.radius()
    if selector is not None:
        r = r[list(selector)]
    return [Interval(-ri, ri) for ri in r]


class ZonotopeBounder:
    """
    Runs the error-bound recursion in lockstep with a filter.

    Call :meth:`propagate` after every filter time update and :meth:`update`
    after every measurement update, passing the matrices the filter used.
    The bound returned by :meth:`output` is the a-posteriori one on epochs
    with a measurement and the a-priori one otherwise.
    """

    def __init__(self, E0: ErrorZonotope, cfg: PlConfig) -> None:
        if cfg.q < E0.dim:
            raise ValueError(f"q={cfg.q} below error dimension {E0.dim}")
        self.cfg = cfg
        self.E = E0
        self._W_cache: tuple[bytes, NDArray] | None = None

    def _noise_gen(self, Q: NDArray) -> NDArray:
        key = np.diag(Q).tobytes()
        if self._W_cache is None or self._W_cache[0] != key:
            self._W_cache = (key, _noise_box(Q, self.cfg.n_sigma_z).generators)
        return self._W_cache[1]

    def propagate(self, F: NDArray, G: NDArray, Q: NDArray) -> ErrorZonotope:
        self.E = propagate_error_zonotope(self.E, F, G, self._noise_gen(Q), self.cfg.q)
        return self.E

    def update(self, K: NDArray, H: NDArray, R: NDArray) -> ErrorZonotope:
        if H.shape[0] == 0:
            return self.E
        V = _noise_box(R, self.cfg.n_sigma_z).generators
        self.E = update_error_zonotope(self.E, K, H, V, self.cfg.q)
        return self.E

    def output(self) -> ErrorZonotope:
        return self.E

    def pl(self, selector: Sequence[int] = (0, 1, 2)) -> NDArray:
        return self.E.radius()[list(selector)]
