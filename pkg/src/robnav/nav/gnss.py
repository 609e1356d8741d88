"""GNSS observables: pseudorange/deltarange prediction and the sigma-epsilon noise model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass
class GnssObservation:
    """
    One satellite's observables at an epoch.

    ``v_es_n`` is the satellite velocity already resolved in the local NED frame
    at the antenna. The correction terms are zero for pre-corrected observables.
    """

    sat_id: str
    p_es_e: NDArray
    v_es_n: NDArray
    pseudorange: float
    deltarange: float
    cn0: float
    c_s: float = 0.0
    I_r: float = 0.0
    T_r: float = 0.0
    M_rho: float = 0.0

    def __post_init__(self) -> None:
        if not 10.0 <= self.cn0 <= 60.0:
            raise ValueError(f"C/N0 {self.cn0} dB-Hz outside [10, 60]")
        if not self.pseudorange > 0.0:
            raise ValueError("pseudorange must be positive")

    @property
    def correction(self) -> float:
        return self.c_s + self.I_r + self.T_r + self.M_rho


def sigma_epsilon(cn0: float | NDArray, C_rho: float, C_d: float):
    """
    Noise standard deviations from carrier-to-noise density.

    ``sigma^2 = C^2 10^(-cn0/10)`` for both pseudorange (m) and deltarange (m/s).
    """
    scale = 10.0 ** (-np.asarray(cn0, dtype=float) / 20.0)
    return C_rho * scale, C_d * scale


def line_of_sight(p_eA_e: NDArray, p_es_e: NDArray) -> tuple[NDArray, float]:
    """Unit vector antenna to satellite (ECEF) and the geometric range."""
    d = p_es_e - p_eA_e
    r = float(np.sqrt(d @ d))
    return d / r, r


def predict_pseudorange(p_eA_e: NDArray, c_b: float, obs: GnssObservation) -> float:
    _, r = line_of_sight(p_eA_e, obs.p_es_e)
    return r + c_b + obs.correction


def predict_deltarange(
    p_eA_e: NDArray, v_eA_n: NDArray, c_d: float, obs: GnssObservation, C_en: NDArray
) -> float:
    e_e, _ = line_of_sight(p_eA_e, obs.p_es_e)
    e_n = C_en @ e_e
    return float(e_n @ (obs.v_es_n - v_eA_n)) + c_d


def gnss_rows(
    p_eA_e: NDArray,
    v_eA_n: NDArray,
    c_b: float,
    c_d: float,
    observations: list[GnssObservation],
    C_en: NDArray,
    C_rho: float,
    C_d: float,
):
    """
    Stacked measurement quantities for a set of satellites.

    Returns ``(z, z_pred, H_pos, H_vel, sigma)`` with pseudoranges first, then
    deltaranges. ``H_pos`` is the sensitivity to a local NED position error and
    ``H_vel`` to a NED velocity error; clock sensitivities are all ones.
    """
    n = len(observations)
    z = np.empty(2 * n)
    z_pred = np.empty(2 * n)
    H_pos = np.zeros((2 * n, 3))
    H_vel = np.zeros((2 * n, 3))
    cn0 = np.empty(n)
    for i, obs in enumerate(observations):
        e_e, r = line_of_sight(p_eA_e, obs.p_es_e)
        e_n = C_en @ e_e
        dv = obs.v_es_n - v_eA_n
        z[i] = obs.pseudorange
        z_pred[i] = r + c_b + obs.correction
        z[n + i] = obs.deltarange
        z_pred[n + i] = float(e_n @ dv) + c_d
        H_pos[i] = -e_n
        # d(e_n)/d(p_n) = -(I - e e') / r
        H_pos[n + i] = -(dv - e_n * float(e_n @ dv)) / r
        H_vel[n + i] = -e_n
        cn0[i] = obs.cn0
    s_rho, s_d = sigma_epsilon(cn0, C_rho, C_d)
    sigma = np.concatenate((s_rho, s_d))
    return z, z_pred, H_pos, H_vel, sigma


def pdop(p_eA_e: NDArray, sat_positions: NDArray) -> float:
    """Position dilution of precision for the given satellite ECEF positions."""
    rows = []
    for p in sat_positions:
        e, _ = line_of_sight(p_eA_e, p)
        rows.append(np.r_[-e, 1.0])
    G = np.array(rows)
    try:
        cov = np.linalg.inv(G.T @ G)
    except np.linalg.LinAlgError:
        return float("inf")
    return float(np.sqrt(np.trace(cov[:3, :3])))
