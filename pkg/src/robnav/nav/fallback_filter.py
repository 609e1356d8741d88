"""
GNSS-only fallback model: uniform (constant) velocity, 10-element state, 8-dimensional error.

State ``p_eA_e (3, ECEF) | v_eA_n (3, NED) | c_b | c_d``; error
``dp (3, local NED) | dv (3) | dc_b | dc_d``. The vehicle acceleration is treated
as process noise: a velocity random walk with spectral density ``sigma_a**2``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from robnav.nav.frames import LocalFrame
from robnav.nav.gnss import GnssObservation, gnss_rows
from robnav.nav.params import NoiseParams

P, V, CB, CD = slice(0, 3), slice(3, 6), 6, 7
N_STATE, N_ERROR, N_NOISE = 8, 8, 5


def uniform_propagate(x: NDArray, dt: float, frame: LocalFrame) -> NDArray:
    """Constant-velocity step; clock bias integrates the drift."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    out = x.copy()
    out[P] = x[P] + dt * (frame.C_ne @ x[V])
    out[CB] = x[CB] + x[CD] * dt
    return out


def fallback_jacobians(dt: float) -> tuple[NDArray, NDArray]:
    F = np.eye(N_ERROR)
    F[0:3, 3:6] = dt * np.eye(3)
    F[6, 7] = dt
    G = np.zeros((N_ERROR, N_NOISE))
    G[0:3, 0:3] = 0.5 * dt * np.eye(3)
    G[3:6, 0:3] = np.eye(3)
    G[6, 3] = 1.0
    G[7, 4] = 1.0
    return F, G


class FallbackFilterModel:
    """:class:`robnav.filtering.FilterModel` for the GNSS-only fallback filter."""

    n_e = N_ERROR
    n_w = N_NOISE

    def __init__(self, frame: LocalFrame, noise: NoiseParams | None = None) -> None:
        self.frame = frame
        self.noise = noise if noise is not None else NoiseParams()

    def propagate_state(self, x: NDArray, u, dt: float) -> NDArray:
        return uniform_propagate(x, dt, self.frame)

    def jacobians(self, x: NDArray, u, dt: float) -> tuple[NDArray, NDArray]:
        return fallback_jacobians(dt)

    def process_noise(self, dt: float) -> NDArray:
        sa = np.asarray(self.noise.fallback_accel, dtype=float)
        return np.diag(np.r_[sa**2 * dt, self.noise.clock_bias_psd * dt, self.noise.clock_drift_psd * dt])

    def measurement(self, x: NDArray, obs: list[GnssObservation]):
        z, z_pred, H_pos, H_vel, sigma = gnss_rows(
            x[P], x[V], x[CB], x[CD], obs, self.frame.C_en, self.noise.C_rho, self.noise.C_d
        )
        n = len(obs)
        H = np.zeros((2 * n, N_ERROR))
        H[:, 0:3] = H_pos
        H[:, 3:6] = H_vel
        H[:n, 6] = 1.0
        H[n:, 7] = 1.0
        return z, z_pred, H, np.diag(sigma**2)

    def inject(self, x: NDArray, dx: NDArray) -> NDArray:
        out = x.copy()
        out[P] = x[P] + self.frame.C_ne @ dx[0:3]
        out[V] = x[V] + dx[3:6]
        out[CB] = x[CB] + dx[6]
        out[CD] = x[CD] + dx[7]
        return out

    def difference(self, x: NDArray, y: NDArray) -> NDArray:
        d = x - y
        d[P] = self.frame.C_en @ (x[P] - y[P])
        return d

    def initial_covariance(self, sigma0=None) -> NDArray:
        s = (sigma0 or self.noise.sigma0).fallback_vector()
        return np.diag(s**2)
