"""
IMU fault detection against a single-track vehicle model, and filter supervision.

Control inputs (motor current, steering angle) and odometer speed are widened to
intervals of ``n_sigma_D`` standard deviations and pushed through the vehicle
model with interval arithmetic. A bias-compensated IMU sample outside the
resulting longitudinal-acceleration or yaw-rate interval is a fault.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from robnav.zonotope import (
    Interval,
    interval_abs_square,
    interval_mul,
    interval_scale,
    interval_sign,
    interval_tan,
)

DEG = math.pi / 180.0
STEERING_MARGIN = 1e-3  # rad inside +-pi/2


@dataclass(frozen=True)
class VehicleParams:
    """
    Single-track model parameters.

    The longitudinal force is ``k_m I - (c0 sign(v) + c1 v + c2 v |v|)``.
    """

    L: float = 1.5  # m, wheelbase
    m_eff: float = 150.0  # kg, mass plus rotating-mass equivalent
    k_m: float = 15.0  # N/A
    c0: float = 5.0  # N
    c1: float = 8.0  # N s/m
    c2: float = 0.5  # N s^2/m^2

    def __post_init__(self) -> None:
        if not self.L > 0.0 or not self.m_eff > 0.0:
            raise ValueError("wheelbase and mass must be positive")

    def drag(self, v):
        """Resistive force in N; accepts scalars or arrays."""
        return self.c0 * np.sign(v) + self.c1 * v + self.c2 * v * np.abs(v)


@dataclass(frozen=True)
class ControlSample:
    I: float  # A, motor current
    delta: float  # rad, steering angle
    v_D: float  # m/s, odometer speed
    t: float = 0.0


@dataclass(frozen=True)
class FdConfig:
    n_sigma_D: float = 6.0
    sigma_I: float = 1.0  # A
    sigma_delta: float = 1.0 * DEG  # rad
    sigma_v: float = 0.1  # m/s
    dwell: float = 5.0  # s
    recovery_count: int = 100  # consecutive clear epochs

    def __post_init__(self) -> None:
        if min(self.sigma_I, self.sigma_delta, self.sigma_v) < 0.0:
            raise ValueError("standard deviations must be non-negative")


@dataclass(frozen=True)
class FaultFlag:
    accel_fault: bool
    yaw_fault: bool
    active_filter: str = "main"
    epoch: int = 0

    @property
    def any(self) -> bool:
        return self.accel_fault or self.yaw_fault


def input_intervals(ctrl: ControlSample, cfg: FdConfig) -> tuple[Interval, Interval, Interval]:
    n = cfg.n_sigma_D
    i_iv = Interval.around(ctrl.I, n * cfg.sigma_I)
    d_iv = Interval.around(ctrl.delta, n * cfg.sigma_delta)
    v_iv = Interval.around(ctrl.v_D, n * cfg.sigma_v)
    if not (-math.pi / 2 + STEERING_MARGIN < d_iv.lo and d_iv.hi < math.pi / 2 - STEERING_MARGIN):
        raise ValueError("steering interval out of domain")
    return i_iv, d_iv, v_iv


def force_model(v: Interval, I: Interval, p: VehicleParams) -> Interval:
    """Interval enclosure of the net longitudinal force in N."""
    drag = (
        interval_scale(interval_sign(v), p.c0)
        + interval_scale(v, p.c1)
        + interval_scale(interval_abs_square(v), p.c2)
    )
    return interval_scale(I, p.k_m) - drag


def acceleration_threshold(v: Interval, I: Interval, p: VehicleParams) -> Interval:
    return interval_scale(force_model(v, I, p), 1.0 / p.m_eff)


def yawrate_threshold(v: Interval, delta: Interval, p: VehicleParams) -> Interval:
    return interval_scale(interval_mul(v, interval_tan(delta)), 1.0 / p.L)


def compensated_imu(f_x: float, w_z: float, b_a_x: float, b_g_z: float) -> tuple[float, float]:
    """Bias-compensated longitudinal specific force and yaw rate."""
    return f_x - b_a_x, w_z - b_g_z


def thresholds(ctrl: ControlSample, p: VehicleParams, cfg: FdConfig) -> tuple[Interval, Interval]:
    i_iv, d_iv, v_iv = input_intervals(ctrl, cfg)
    return acceleration_threshold(v_iv, i_iv, p), yawrate_threshold(v_iv, d_iv, p)


def detect_fault(f_x: float, w_z: float, a_thr: Interval, yaw_thr: Interval, epoch: int = 0) -> FaultFlag:
    # closed intervals: a value on the boundary is not a fault
    return FaultFlag(not a_thr.contains(f_x), not yaw_thr.contains(w_z), epoch=epoch)


class Supervisor:
    """
    Main/fallback switching with latch-and-recover policy.

    The first fault switches to the fallback filter. The fallback stays active
    for at least ``dwell`` seconds; afterwards the main filter is restored once
    ``recovery_count`` consecutive fault-free epochs have been seen.
    """

    def __init__(self, cfg: FdConfig) -> None:
        self.cfg = cfg
        self.active = "main"
        self.switched_at: float | None = None
        self.clear = 0
        self.timeline: list[tuple[float, str]] = []

    def step(self, t: float, fault: bool) -> str:
        if fault:
            self.clear = 0
        else:
            self.clear += 1
        if self.active == "main":
            if fault:
                self.active = "fallback"
                self.switched_at = t
                self.timeline.append((t, "fallback"))
        elif t - self.switched_at >= self.cfg.dwell and self.clear >= self.cfg.recovery_count:
            self.active = "main"
            self.switched_at = None
            self.timeline.append((t, "main"))
        return self.active


def supervise(times, faults, cfg: FdConfig) -> list[str]:
    """Active filter per epoch for a whole fault history."""
    sup = Supervisor(cfg)
    return [sup.step(t, f) for t, f in zip(times, faults)]
