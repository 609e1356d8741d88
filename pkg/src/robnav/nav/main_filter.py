"""
Tightly coupled GNSS/INS model: 18-element state, 17-dimensional error state.

State vector (antenna referenced)::

    p_eA_e (3, ECEF m) | v_eA_n (3, NED m/s) | q_b_n (4) | b_a (3) | b_g (3) | c_b | c_d

Error state::

    dp (3, local NED m) | dv (3) | dpsi (3, NED small angles) | db_a (3) | db_g (3) | dc_b | dc_d

The attitude error is multiplicative, ``C_true = Exp(dpsi) C_est``. Earth rotation,
Coriolis and transport rate are neglected; gravity is a constant NED vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from robnav.nav.frames import (
    GRAVITY,
    LocalFrame,
    cross3,
    quat_from_rotvec,
    quat_mult,
    quat_to_dcm,
    right_jacobian,
    rot_exp,
    rot_log,
    skew,
)
from robnav.nav.gnss import GnssObservation, gnss_rows
from robnav.nav.params import LEVER_ARM, NoiseParams

G_N = np.array([0.0, 0.0, GRAVITY])

# state slices
P, V, Q, BA, BG, CB, CD = slice(0, 3), slice(3, 6), slice(6, 10), slice(10, 13), slice(13, 16), 16, 17
# error-state slices
EP, EV, EA, EBA, EBG, ECB, ECD = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12), slice(12, 15), 15, 16
N_STATE, N_ERROR, N_NOISE = 18, 17, 14
POSITION = (0, 1, 2)
MAIN_TO_FALLBACK = (0, 1, 2, 3, 4, 5, 15, 16)


@dataclass
class ImuSample:
    """Specific force (m/s^2) and angular rate (rad/s) in the IMU body frame."""

    f_ib_b: NDArray
    w_ib_b: NDArray
    t: float = 0.0


@dataclass
class MainState:
    p_eA_e: NDArray
    v_eA_n: NDArray
    q_b_n: NDArray
    b_a: NDArray
    b_g: NDArray
    c_b: float
    c_d: float

    def vector(self) -> NDArray:
        return np.r_[self.p_eA_e, self.v_eA_n, self.q_b_n, self.b_a, self.b_g, self.c_b, self.c_d]

    @classmethod
    def from_vector(cls, x: NDArray) -> MainState:
        return cls(x[P].copy(), x[V].copy(), x[Q].copy(), x[BA].copy(), x[BG].copy(), float(x[CB]), float(x[CD]))


def bias_propagate(b: NDArray, tau: float, dt: float) -> NDArray:
    """Mean propagation of a first-order Gauss-Markov bias."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    if math.isinf(tau):
        return np.array(b, dtype=float)
    return np.asarray(b) * math.exp(-dt / tau)


def lever_arm_transform(
    x: NDArray, w_ib_b: NDArray, frame: LocalFrame, lever: NDArray = np.array(LEVER_ARM)
) -> tuple[NDArray, NDArray]:
    """IMU-body position (ECEF) and velocity (NED) from the antenna-referenced state."""
    C = quat_to_dcm(x[Q])
    w = w_ib_b - x[BG]
    p_eb = x[P] - frame.C_ne @ (C @ lever)
    v_eb = x[V] - C @ cross3(w, lever)
    return p_eb, v_eb


def _decay(tau: float, dt: float) -> float:
    return 1.0 if math.isinf(tau) else math.exp(-dt / tau)


def strapdown_propagate(
    x: NDArray,
    imu: ImuSample,
    dt: float,
    frame: LocalFrame,
    noise: NoiseParams,
    lever: NDArray = np.array(LEVER_ARM),
) -> NDArray:
    """
    One strapdown step of the antenna-referenced state.

    The antenna state is moved to the IMU with the lever arm, the IMU is
    integrated (exact attitude exponential, mid-interval attitude for the
    specific force, trapezoidal position) and the result is moved back.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt={dt} outside (0, 0.1] s")
    C = quat_to_dcm(x[Q])
    w = imu.w_ib_b - x[BG]
    f = imu.f_ib_b - x[BA]
    wxl = cross3(w, lever)
    p_b = x[P] - frame.C_ne @ (C @ lever)
    v_b = x[V] - C @ wxl

    q_new = quat_mult(x[Q], quat_from_rotvec(w * dt))
    q_new /= np.linalg.norm(q_new)
    C_new = quat_to_dcm(q_new)
    C_mid = C @ rot_exp(0.5 * dt * w)

    v_b_new = v_b + dt * (C_mid @ f + G_N)
    p_b_new = p_b + 0.5 * dt * (frame.C_ne @ (v_b + v_b_new))

    out = np.empty(N_STATE)
    out[P] = p_b_new + frame.C_ne @ (C_new @ lever)
    out[V] = v_b_new + C_new @ wxl
    out[Q] = q_new
    out[BA] = x[BA] * _decay(noise.tau_a, dt)
    out[BG] = x[BG] * _decay(noise.tau_g, dt)
    out[CB] = x[CB] + x[CD] * dt
    out[CD] = x[CD]
    return out


def main_jacobians(
    x: NDArray,
    imu: ImuSample,
    dt: float,
    noise: NoiseParams,
    lever: NDArray = np.array(LEVER_ARM),
) -> tuple[NDArray, NDArray]:
    """Discrete error-state transition ``F`` (17x17) and noise shaping ``G`` (17x14)."""
    C = quat_to_dcm(x[Q])
    w = imu.w_ib_b - x[BG]
    f = imu.f_ib_b - x[BA]
    wdt = w * dt
    C_new = C @ rot_exp(wdt)
    C_mid = C @ rot_exp(0.5 * wdt)
    u0 = C @ cross3(w, lever)
    u1 = C_new @ cross3(w, lever)
    CLx = C @ skew(lever)
    CLx_new = C_new @ skew(lever)
    I3 = np.eye(3)

    # Each block is linear in (dp, dv, dpsi, df, dw) with df = -(db_a + n_a), dw = -(db_g + n_g).
    # IMU-frame errors at the start of the step
    pb_psi = skew(C @ lever)
    vb_psi = skew(u0)
    vb_w = CLx
    # attitude
    psi_w = dt * C_new @ right_jacobian(wdt)
    # velocity increment
    a_mid = C_mid @ f
    dv_psi = -dt * skew(a_mid)
    dv_f = dt * C_mid
    dv_w = -0.5 * dt * dt * C_mid @ skew(f) @ right_jacobian(0.5 * wdt)

    # velocity at the IMU after the step
    v1_v = I3
    v1_psi = vb_psi + dv_psi
    v1_f = dv_f
    v1_w = vb_w + dv_w
    # position at the IMU after the step: dp_b + dt dv_b + dt/2 ddv
    p1_p = I3
    p1_v = dt * I3
    p1_psi = pb_psi + dt * vb_psi + 0.5 * dt * dv_psi
    p1_f = 0.5 * dt * dv_f
    p1_w = dt * vb_w + 0.5 * dt * dv_w
    # back to the antenna
    back_p = -skew(C_new @ lever)
    back_v = -skew(u1)
    A_p, A_v, A_psi, A_f, A_w = p1_p, p1_v, p1_psi + back_p, p1_f, p1_w + back_p @ psi_w
    B_v, B_psi, B_f, B_w = v1_v, v1_psi + back_v, v1_f, v1_w + back_v @ psi_w - CLx_new

    F = np.zeros((N_ERROR, N_ERROR))
    F[EP, EP] = A_p
    F[EP, EV] = A_v
    F[EP, EA] = A_psi
    F[EP, EBA] = -A_f
    F[EP, EBG] = -A_w
    F[EV, EV] = B_v
    F[EV, EA] = B_psi
    F[EV, EBA] = -B_f
    F[EV, EBG] = -B_w
    F[EA, EA] = I3
    F[EA, EBG] = -psi_w
    F[EBA, EBA] = _decay(noise.tau_a, dt) * I3
    F[EBG, EBG] = _decay(noise.tau_g, dt) * I3
    F[ECB, ECB] = 1.0
    F[ECB, ECD] = dt
    F[ECD, ECD] = 1.0

    G = np.zeros((N_ERROR, N_NOISE))
    G[EP, 0:3] = -A_f
    G[EP, 3:6] = -A_w
    G[EV, 0:3] = -B_f
    G[EV, 3:6] = -B_w
    G[EA, 3:6] = -psi_w
    G[EBA, 6:9] = I3
    G[EBG, 9:12] = I3
    G[ECB, 12] = 1.0
    G[ECD, 13] = 1.0
    return F, G


def main_process_noise(noise: NoiseParams, dt: float) -> NDArray:
    """Diagonal per-step noise covariance, ordered like the columns of ``G``."""
    sa = noise.accel_sigma(dt)
    sg = noise.gyro_sigma(dt)
    sba = noise.bias_step_sigma(noise.sigma_ba, noise.tau_a, dt)
    sbg = noise.bias_step_sigma(noise.sigma_bg, noise.tau_g, dt)
    return np.diag(
        np.r_[
            [sa**2] * 3,
            [sg**2] * 3,
            [sba**2] * 3,
            [sbg**2] * 3,
            noise.clock_bias_psd * dt,
            noise.clock_drift_psd * dt,
        ]
    )


def inject_main(x: NDArray, dx: NDArray, frame: LocalFrame) -> NDArray:
    """Apply an error-state correction ``x (+) dx``."""
    out = x.copy()
    out[P] = x[P] + frame.C_ne @ dx[EP]
    out[V] = x[V] + dx[EV]
    q = quat_mult(quat_from_rotvec(dx[EA]), x[Q])
    out[Q] = q / np.linalg.norm(q)
    out[BA] = x[BA] + dx[EBA]
    out[BG] = x[BG] + dx[EBG]
    out[CB] = x[CB] + dx[ECB]
    out[CD] = x[CD] + dx[ECD]
    return out


def difference_main(x: NDArray, y: NDArray, frame: LocalFrame) -> NDArray:
    """Error-state difference ``x (-) y`` such that ``y (+) (x (-) y) = x``."""
    d = np.empty(N_ERROR)
    d[EP] = frame.C_en @ (x[P] - y[P])
    d[EV] = x[V] - y[V]
    d[EA] = rot_log(quat_to_dcm(x[Q]) @ quat_to_dcm(y[Q]).T)
    d[EBA] = x[BA] - y[BA]
    d[EBG] = x[BG] - y[BG]
    d[ECB] = x[CB] - y[CB]
    d[ECD] = x[CD] - y[CD]
    return d


def measurement_jacobian_main(x: NDArray, observations: list[GnssObservation], frame: LocalFrame) -> NDArray:
    return MainFilterModel(frame).measurement(x, observations)[2]


class MainFilterModel:
    """:class:`robnav.filtering.FilterModel` for the IMU-driven main filter."""

    n_e = N_ERROR
    n_w = N_NOISE

    def __init__(
        self,
        frame: LocalFrame,
        noise: NoiseParams | None = None,
        lever: NDArray = np.array(LEVER_ARM),
    ) -> None:
        self.frame = frame
        self.noise = noise if noise is not None else NoiseParams()
        self.lever = np.asarray(lever, dtype=float)
        self._Q: tuple[float, NDArray] | None = None

    def propagate_state(self, x: NDArray, u: ImuSample, dt: float) -> NDArray:
        return strapdown_propagate(x, u, dt, self.frame, self.noise, self.lever)

    def jacobians(self, x: NDArray, u: ImuSample, dt: float) -> tuple[NDArray, NDArray]:
        return main_jacobians(x, u, dt, self.noise, self.lever)

    def process_noise(self, dt: float) -> NDArray:
        if self._Q is None or self._Q[0] != dt:
            self._Q = (dt, main_process_noise(self.noise, dt))
        return self._Q[1]

    def measurement(self, x: NDArray, obs: list[GnssObservation]):
        z, z_pred, H_pos, H_vel, sigma = gnss_rows(
            x[P], x[V], x[CB], x[CD], obs, self.frame.C_en, self.noise.C_rho, self.noise.C_d
        )
        n = len(obs)
        H = np.zeros((2 * n, N_ERROR))
        H[:, EP] = H_pos
        H[:, EV] = H_vel
        H[:n, ECB] = 1.0
        H[n:, ECD] = 1.0
        return z, z_pred, H, np.diag(sigma**2)

    def inject(self, x: NDArray, dx: NDArray) -> NDArray:
        return inject_main(x, dx, self.frame)

    def difference(self, x: NDArray, y: NDArray) -> NDArray:
        return difference_main(x, y, self.frame)

    def initial_covariance(self, sigma0=None) -> NDArray:
        s = (sigma0 or self.noise.sigma0).main_vector()
        return np.diag(s**2)
