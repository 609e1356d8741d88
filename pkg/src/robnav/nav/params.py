"""Default sensor and filter parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

DEG = math.pi / 180.0

LEVER_ARM = (0.0, 0.0, -0.1131)  # antenna in IMU body frame, m


@dataclass
class InitialSigma:
    """Initial standard deviations of the navigation states."""

    pos: tuple[float, float, float] = (0.1, 0.1, 0.2)  # m, N/E/D
    vel: float = 1.0  # m/s
    att: float = 5.0 * DEG  # rad
    acc_bias: float = 0.1  # m/s^2
    gyro_bias: float = 0.01 * DEG  # rad/s
    clock_bias: float = 10.0  # m
    clock_drift: float = 10.0  # m/s

    def main_vector(self) -> np.ndarray:
        return np.r_[
            self.pos,
            [self.vel] * 3,
            [self.att] * 3,
            [self.acc_bias] * 3,
            [self.gyro_bias] * 3,
            self.clock_bias,
            self.clock_drift,
        ]

    def fallback_vector(self) -> np.ndarray:
        return np.r_[self.pos, [self.vel] * 3, self.clock_bias, self.clock_drift]


@dataclass
class NoiseParams:
    """
    Process and measurement noise parameters.

    IMU white noise is given as a density, so the per-sample standard deviation at
    step ``dt`` is ``density / sqrt(dt)``. Biases are first-order Gauss-Markov with
    steady-state standard deviation ``sigma_b*`` and correlation time ``tau_*``.
    """

    C_rho: float = 60.0  # m
    C_d: float = 2.0  # m/s
    accel_density: float = 0.002  # m/s/sqrt(s)
    gyro_density: float = 1e-4  # rad/sqrt(s)
    tau_a: float = 600.0  # s
    tau_g: float = 600.0  # s
    sigma_ba: float = 0.1  # m/s^2
    sigma_bg: float = 0.01 * DEG  # rad/s
    clock_bias_psd: float = 0.01  # m^2/s
    clock_drift_psd: float = 0.01  # m^2/s^3
    fallback_accel: tuple[float, float, float] = (0.3, 0.3, 0.1)  # m/s^2
    sigma0: InitialSigma = field(default_factory=InitialSigma)

    def __post_init__(self) -> None:
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, float) and not val > 0.0:
                raise ValueError(f"noise parameter {f.name} must be positive")
        if min(self.fallback_accel) <= 0.0:
            raise ValueError("fallback acceleration noise must be positive")

    def accel_sigma(self, dt: float) -> float:
        return self.accel_density / math.sqrt(dt)

    def gyro_sigma(self, dt: float) -> float:
        return self.gyro_density / math.sqrt(dt)

    def bias_step_sigma(self, sigma_b: float, tau: float, dt: float) -> float:
        return sigma_b * math.sqrt(-math.expm1(-2.0 * dt / tau))
