"""Analytic planar ground truth for a piecewise trajectory on flat ground."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from robnav.nav.frames import GRAVITY
from robnav.sim.config import ConfigError, ScenarioConfig, Segment


@dataclass
class Truth:
    """
    Ground truth of the IMU body origin at a set of times.

    The vehicle is level and heads along its velocity, so attitude reduces to the
    heading angle ``yaw`` (clockwise from north).
    """

    t: NDArray  # (N,)
    pos: NDArray  # (N, 3) NED m relative to the origin
    vel: NDArray  # (N, 3) NED m/s
    acc: NDArray  # (N, 3) NED m/s^2
    yaw: NDArray  # (N,) rad
    yaw_rate: NDArray  # (N,) rad/s
    speed: NDArray  # (N,) m/s
    accel_long: NDArray  # (N,) m/s^2 along track
    curvature: NDArray  # (N,) 1/m

    def __len__(self) -> int:
        return self.t.size

    def specific_force_body(self) -> NDArray:
        """Accelerometer truth ``C_n^b (a - g)``; only yaw rotates a level vehicle."""
        f = np.empty((len(self), 3))
        f[:, 0] = self.accel_long
        f[:, 1] = self.curvature * self.speed**2
        f[:, 2] = -GRAVITY
        return f

    def angular_rate_body(self) -> NDArray:
        w = np.zeros((len(self), 3))
        w[:, 2] = self.yaw_rate
        return w


def _kinematics(seg: Segment, v0: float, tau):
    """Arc length, speed and along-track acceleration at local times ``tau``."""
    T = seg.duration
    v1 = v0 if seg.end_speed is None else seg.end_speed
    dv = v1 - v0
    u = np.asarray(tau, dtype=float) / T
    s = v0 * T * u + dv * T * (u**3 - 0.5 * u**4)
    v = v0 + dv * (3 * u**2 - 2 * u**3)
    a = dv * (6 * u - 6 * u**2) / T
    return s, v, a


def _advance(p0: NDArray, psi0: float, k: float, s):
    """Planar position and heading after arc length ``s`` on curvature ``k``."""
    psi = psi0 + k * s
    if k == 0.0:
        return p0[0] + s * math.cos(psi0), p0[1] + s * math.sin(psi0), psi
    return p0[0] + (np.sin(psi) - math.sin(psi0)) / k, p0[1] - (np.cos(psi) - math.cos(psi0)) / k, psi


class Trajectory:
    """
    Piecewise trajectory evaluated in closed form at arbitrary times.

    Within a segment the speed follows ``v0 + dv (3u^2 - 2u^3)``, ``u = tau / T``,
    so acceleration is continuous and zero at both ends of a speed change.
    """

    def __init__(self, cfg: ScenarioConfig) -> None:
        cfg.validate()
        self.segments = list(cfg.segments)
        self.starts = []  # (t0, p0, psi0, v0)
        t0, p0, psi0, v0 = 0.0, np.zeros(2), math.radians(cfg.initial_heading_deg), 0.0
        for seg in self.segments:
            self.starts.append((t0, p0.copy(), psi0, v0))
            s_end, v_end, _ = _kinematics(seg, v0, seg.duration)
            if v_end < -1e-12:
                raise ConfigError("trajectory produces negative speed")
            n, e, psi0 = _advance(p0, psi0, seg.curvature(), float(s_end))
            p0 = np.array([n, e], dtype=float)
            t0 += seg.duration
            v0 = float(v_end)
        self.duration = t0
        self.end = (p0, psi0, v0)

    def evaluate(self, t: ArrayLike) -> Truth:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.size and (t.min() < -1e-9 or t.max() > self.duration + 1e-9):
            raise ValueError("time outside the trajectory")
        t0s = np.array([s[0] for s in self.starts])
        seg_idx = np.clip(np.searchsorted(t0s, t, side="right") - 1, 0, len(self.segments) - 1)
        N = t.size
        pos = np.zeros((N, 3))
        speed, accel, kappa, yaw = (np.zeros(N) for _ in range(4))
        for i, seg in enumerate(self.segments):
            m = seg_idx == i
            if not m.any():
                continue
            t0, p0, psi0, v0 = self.starts[i]
            s, v, a = _kinematics(seg, v0, t[m] - t0)
            k = seg.curvature()
            n, e, psi = _advance(p0, psi0, k, s)
            pos[m, 0], pos[m, 1] = n, e
            speed[m], accel[m], kappa[m], yaw[m] = v, a, k, psi
        if np.any(speed < -1e-12):
            raise ConfigError("trajectory produces negative speed")
        cy, sy = np.cos(yaw), np.sin(yaw)
        vel = np.zeros_like(pos)
        vel[:, 0] = speed * cy
        vel[:, 1] = speed * sy
        lat = kappa * speed**2
        acc = np.zeros_like(pos)
        acc[:, 0] = accel * cy - lat * sy
        acc[:, 1] = accel * sy + lat * cy
        return Truth(t, pos, vel, acc, yaw, kappa * speed, speed, accel, kappa)


def epoch_times(cfg: ScenarioConfig) -> NDArray:
    n = int(round(cfg.duration * cfg.imu_rate))
    return np.arange(n + 1) / cfg.imu_rate


def generate_truth(cfg: ScenarioConfig) -> Truth:
    """Truth at every IMU epoch, both ends included."""
    return Trajectory(cfg).evaluate(epoch_times(cfg))
