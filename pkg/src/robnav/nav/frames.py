"""Rotation, quaternion and local-frame helpers (scalar-first Hamilton quaternions)."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

GRAVITY = 9.80665  # m/s^2, along NED down

WGS84_A = 6_378_137.0
WGS84_E2 = 6.69437999014e-3


def skew(v: ArrayLike) -> NDArray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross3(a: NDArray, b: NDArray) -> NDArray:
    """Cross product of two 3-vectors (cheaper than ``np.cross`` for single vectors)."""
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def rot_exp(phi: ArrayLike) -> NDArray:
    """Rotation matrix of a rotation vector (Rodrigues)."""
    phi = np.asarray(phi, dtype=float)
    theta = math.sqrt(float(phi @ phi))
    K = skew(phi)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + (math.sin(theta) / theta) * K
        + ((1.0 - math.cos(theta)) / theta**2) * K @ K
    )


def rot_log(C: NDArray) -> NDArray:
    """Rotation vector of a rotation matrix."""
    cos_t = min(1.0, max(-1.0, 0.5 * (np.trace(C) - 1.0)))
    theta = math.acos(cos_t)
    w = np.array([C[2, 1] - C[1, 2], C[0, 2] - C[2, 0], C[1, 0] - C[0, 1]])
    if theta < 1e-8:
        return 0.5 * w
    return theta / (2.0 * math.sin(theta)) * w


def right_jacobian(phi: ArrayLike) -> NDArray:
    """SO(3) right Jacobian: ``Exp(phi + d) ~ Exp(phi) Exp(J_r d)``."""
    phi = np.asarray(phi, dtype=float)
    theta = math.sqrt(float(phi @ phi))
    K = skew(phi)
    if theta < 1e-6:
        return np.eye(3) - 0.5 * K + K @ K / 6.0
    return (
        np.eye(3)
        - ((1.0 - math.cos(theta)) / theta**2) * K
        + ((theta - math.sin(theta)) / theta**3) * K @ K
    )


def quat_mult(p: NDArray, q: NDArray) -> NDArray:
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ]
    )


def quat_from_rotvec(phi: ArrayLike) -> NDArray:
    phi = np.asarray(phi, dtype=float)
    theta = math.sqrt(float(phi @ phi))
    if theta < 1e-12:
        q = np.array([1.0, 0.5 * phi[0], 0.5 * phi[1], 0.5 * phi[2]])
        return q / np.linalg.norm(q)
    s = math.sin(0.5 * theta) / theta
    return np.array([math.cos(0.5 * theta), s * phi[0], s * phi[1], s * phi[2]])


def quat_to_dcm(q: NDArray) -> NDArray:
    """Rotation matrix ``C`` with ``v_n = C v_b`` for ``q = q_b^n``."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_dcm(C: NDArray) -> NDArray:
    return quat_from_rotvec(rot_log(C))


def quat_from_euler(roll: float, pitch: float, yaw: float) -> NDArray:
    """ZYX Euler angles to ``q_b^n``."""
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )


def euler_from_quat(q: NDArray) -> tuple[float, float, float]:
    C = quat_to_dcm(q)
    roll = math.atan2(C[2, 1], C[2, 2])
    pitch = -math.asin(max(-1.0, min(1.0, C[2, 0])))
    yaw = math.atan2(C[1, 0], C[0, 0])
    return roll, pitch, yaw


def geodetic_to_ecef(lat_deg: float, lon_deg: float, height: float) -> NDArray:
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * math.sin(lat) ** 2)
    return np.array(
        [
            (n + height) * math.cos(lat) * math.cos(lon),
            (n + height) * math.cos(lat) * math.sin(lon),
            (n * (1.0 - WGS84_E2) + height) * math.sin(lat),
        ]
    )


def ecef_to_ned_matrix(lat_deg: float, lon_deg: float) -> NDArray:
    """``C_e^n`` at the given geodetic latitude/longitude."""
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sl * co, -sl * so, cl],
            [-so, co, 0.0],
            [-cl * co, -cl * so, -sl],
        ]
    )


class LocalFrame:
    """
    Flat-earth local tangent frame anchored at a geodetic origin.

    ``C_e^n`` is constant over the working area; ECEF positions map to local NED
    by a fixed rotation about the origin.
    """

    def __init__(self, lat_deg: float, lon_deg: float, height: float = 0.0) -> None:
        self.lat = lat_deg
        self.lon = lon_deg
        self.height = height
        self.origin = geodetic_to_ecef(lat_deg, lon_deg, height)
        self.C_en = ecef_to_ned_matrix(lat_deg, lon_deg)
        self.C_ne = self.C_en.T

    def to_ecef(self, p_ned: ArrayLike) -> NDArray:
        p = np.asarray(p_ned, dtype=float)
        return self.origin + p @ self.C_en if p.ndim == 2 else self.origin + self.C_ne @ p

    def to_ned(self, p_ecef: ArrayLike) -> NDArray:
        p = np.asarray(p_ecef, dtype=float) - self.origin
        return p @ self.C_ne if p.ndim == 2 else self.C_en @ p
