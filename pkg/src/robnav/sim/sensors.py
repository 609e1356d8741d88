"""
Sensor synthesis from one analytic truth: IMU, GNSS observables and vehicle controls.

Every random stream draws from its own child of the scenario seed, so a change in
one sensor's configuration never reshuffles another's noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.stats import truncnorm

from robnav.fault_detection import ControlSample
from robnav.nav.frames import LocalFrame, quat_from_euler, quat_to_dcm
from robnav.nav.gnss import GnssObservation, pdop, sigma_epsilon
from robnav.nav.main_filter import N_STATE, ImuSample, inject_main
from robnav.nav.params import LEVER_ARM, NoiseParams
from robnav.sim.config import ConfigError, FaultInjection, ScenarioConfig, apply_overrides
from robnav.sim.truth import Trajectory, Truth, epoch_times

PDOP_LIMIT = 10.0
STREAMS = ("imu", "bias", "gnss", "controls", "init", "faults")


def gaussian(rng: np.random.Generator, size, bound: float | None = None) -> NDArray:
    """Standard normal samples, optionally truncated at ``+-bound``."""
    if bound is None:
        return rng.standard_normal(size)
    return truncnorm.rvs(-bound, bound, size=size, random_state=rng)


def stream_rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


@dataclass
class ImuStream:
    """
    IMU samples at every epoch.

    Row ``k >= 1`` samples the motion at the middle of ``(t_{k-1}, t_k]`` and
    drives the step into epoch ``k``; row 0 is the sample at start-up.
    """

    t: NDArray
    f: NDArray  # (N, 3) m/s^2
    w: NDArray  # (N, 3) rad/s
    bias_a: NDArray  # (N, 3) true accelerometer bias
    bias_g: NDArray  # (N, 3) true gyro bias

    def sample(self, k: int) -> ImuSample:
        return ImuSample(self.f[k], self.w[k], float(self.t[k]))


@dataclass
class ControlStream:
    t: NDArray
    I: NDArray
    delta: NDArray
    v_D: NDArray

    def sample(self, k: int) -> ControlSample:
        return ControlSample(float(self.I[k]), float(self.delta[k]), float(self.v_D[k]), float(self.t[k]))


@dataclass
class Streams:
    """Everything a navigation run consumes, plus the truth it is scored against."""

    cfg: ScenarioConfig
    frame: LocalFrame
    truth: Truth
    x_true: NDArray  # (N, 18) antenna-referenced true state
    imu: ImuStream
    gnss: dict[int, list[GnssObservation]]  # epoch index -> observations
    controls: ControlStream
    x0: NDArray  # initial filter state
    filter_noise: NoiseParams
    events: list[str] = field(default_factory=list)

    @property
    def n_epochs(self) -> int:
        return self.truth.t.size


def satellite_positions(cfg: ScenarioConfig, frame: LocalFrame, t: float) -> list[tuple[NDArray, NDArray]]:
    """ECEF position and NED velocity of every satellite at time ``t``."""
    out = []
    for s in cfg.satellites:
        az, el = math.radians(s.azimuth_deg), math.radians(s.elevation_deg)
        u = np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), -math.sin(el)])
        v = np.asarray(s.velocity_ned, dtype=float)
        out.append((frame.to_ecef(cfg.sat_range * u + v * t), v))
    return out


def check_geometry(cfg: ScenarioConfig, frame: LocalFrame) -> float:
    sats = np.array([p for p, _ in satellite_positions(cfg, frame, 0.0)])
    value = pdop(frame.origin, sats)
    if not value < PDOP_LIMIT:
        raise ConfigError(f"constellation PDOP {value:.2f} not below {PDOP_LIMIT}")
    return value


def true_states(cfg: ScenarioConfig, frame: LocalFrame, truth: Truth, bias_a, bias_g) -> NDArray:
    lever = np.asarray(LEVER_ARM)
    X = np.empty((len(truth), N_STATE))
    for k in range(len(truth)):
        q = quat_from_euler(0.0, 0.0, truth.yaw[k])
        C = quat_to_dcm(q)
        w = np.array([0.0, 0.0, truth.yaw_rate[k]])
        X[k, 0:3] = frame.to_ecef(truth.pos[k] + C @ lever)
        X[k, 3:6] = truth.vel[k] + C @ np.cross(w, lever)
        X[k, 6:10] = q
        X[k, 10:13] = bias_a[k]
        X[k, 13:16] = bias_g[k]
        X[k, 16] = cfg.clock_bias + cfg.clock_drift * truth.t[k]
        X[k, 17] = cfg.clock_drift
    return X


def _gauss_markov(rng, n: int, sigma: float, tau: float, dt: float, bound) -> NDArray:
    phi = math.exp(-dt / tau)
    step = sigma * math.sqrt(1.0 - phi * phi)
    b = np.empty((n, 3))
    b[0] = sigma * gaussian(rng, 3, bound)
    drive = step * gaussian(rng, (n - 1, 3), bound)
    for k in range(1, n):
        b[k] = phi * b[k - 1] + drive[k - 1]
    return b


def sample_midpoints(cfg: ScenarioConfig, traj: Trajectory) -> Truth:
    """Truth at the midpoint of each IMU interval; epoch 0 at the start."""
    t = epoch_times(cfg)
    mid = t - 0.5 / cfg.imu_rate
    mid[0] = 0.0
    return traj.evaluate(mid)


def synthesize_imu(cfg: ScenarioConfig, tm: Truth, rngs) -> ImuStream:
    """Interval-mean truth plus Gauss-Markov bias plus white noise."""
    t = epoch_times(cfg)
    dt = 1.0 / cfg.imu_rate
    bound = cfg.bound_sigma if cfg.bounded_noise else None
    n, s = cfg.noise, cfg.noise_scale
    bias_a = s * _gauss_markov(rngs["bias"], t.size, n.sigma_ba, n.tau_a, dt, bound)
    bias_g = s * _gauss_markov(rngs["bias"], t.size, n.sigma_bg, n.tau_g, dt, bound)
    f = tm.specific_force_body() + bias_a + s * n.accel_sigma(dt) * gaussian(rngs["imu"], (t.size, 3), bound)
    w = tm.angular_rate_body() + bias_g + s * n.gyro_sigma(dt) * gaussian(rngs["imu"], (t.size, 3), bound)
    return ImuStream(t, f, w, bias_a, bias_g)


def synthesize_gnss(
    cfg: ScenarioConfig, frame: LocalFrame, x_true: NDArray, t: NDArray, rng
) -> dict[int, list[GnssObservation]]:
    """Pre-corrected pseudoranges and deltaranges every GNSS epoch."""
    every = int(round(cfg.imu_rate / cfg.gnss_rate))
    bound = cfg.bound_sigma if cfg.bounded_noise else None
    cn0 = np.array([s.cn0 for s in cfg.satellites])
    s_rho, s_d = sigma_epsilon(cn0, cfg.noise.C_rho, cfg.noise.C_d)
    s_rho, s_d = cfg.noise_scale * s_rho, cfg.noise_scale * s_d
    out: dict[int, list[GnssObservation]] = {}
    for k in range(0, t.size, every):
        p_a, v_a = x_true[k, 0:3], x_true[k, 3:6]
        n_rho = s_rho * gaussian(rng, cn0.size, bound)
        n_d = s_d * gaussian(rng, cn0.size, bound)
        obs = []
        for i, (sat, (p_s, v_s)) in enumerate(zip(cfg.satellites, satellite_positions(cfg, frame, t[k]))):
            d = p_s - p_a
            r = float(np.linalg.norm(d))
            e_n = frame.C_en @ (d / r)
            rho = r + x_true[k, 16] + n_rho[i]
            dr = float(e_n @ (v_s - v_a)) + x_true[k, 17] + n_d[i]
            obs.append(GnssObservation(sat.sat_id, p_s, v_s, rho, dr, sat.cn0))
        out[k] = obs
    return out


def synthesize_controls(cfg: ScenarioConfig, truth: Truth, rng) -> ControlStream:
    """
    Invert the single-track model: steering from curvature, current from the force balance.

    ``truth`` should be sampled where the IMU samples are representative (interval
    midpoints), so controls and IMU describe the same motion.
    """
    p = cfg.vehicle
    bound = cfg.bound_sigma if cfg.bounded_noise else None
    delta = np.arctan(p.L * truth.curvature)
    drag = p.drag(truth.speed)
    current = (p.m_eff * truth.accel_long + drag) / p.k_m
    N = len(truth)
    fd, s = cfg.fd, cfg.noise_scale
    return ControlStream(
        epoch_times(cfg),
        current + s * fd.sigma_I * gaussian(rng, N, bound),
        delta + s * fd.sigma_delta * gaussian(rng, N, bound),
        truth.speed + s * fd.sigma_v * gaussian(rng, N, bound),
    )


def initial_estimate(cfg: ScenarioConfig, frame: LocalFrame, x_true0: NDArray, rng) -> NDArray:
    """True start state perturbed by the configured initial uncertainty; biases start at zero."""
    bound = cfg.bound_sigma if cfg.bounded_noise else None
    e = cfg.noise.sigma0.main_vector() * gaussian(rng, 17, bound)
    x = x_true0.copy()
    x[10:16] = 0.0
    e[9:15] = 0.0
    return inject_main(x, e, frame)


def inject_faults(streams: Streams, injections: list[FaultInjection], rng) -> Streams:
    """Apply sensor, initialization and parameter faults in place and log them."""
    t = streams.imu.t
    for inj in injections:
        if inj.kind == "imu_noise_burst":
            m = (t >= inj.start) & (t < inj.stop)
            n = int(m.sum())
            streams.imu.f[m] += inj.sigma * rng.standard_normal((n, 3))
            if inj.gyro_sigma > 0.0:
                streams.imu.w[m] += inj.gyro_sigma * rng.standard_normal((n, 3))
            streams.events.append(f"imu_noise_burst {inj.start:g}-{inj.stop:g} s sigma {inj.sigma:g}")
        elif inj.kind == "yaw_init_error":
            dpsi = np.zeros(17)
            dpsi[8] = math.radians(inj.degrees)
            streams.x0 = inject_main(streams.x0, dpsi, streams.frame)
            streams.events.append(f"yaw_init_error {inj.degrees:g} deg")
        elif inj.kind == "param_falsification":
            streams.filter_noise = apply_overrides(streams.filter_noise, inj.overrides)
            streams.events.append(f"param_falsification {inj.overrides}")
        else:
            raise ConfigError(f"unknown fault kind {inj.kind!r}")
    return streams


def simulate(cfg: ScenarioConfig) -> Streams:
    """Generate all sensor streams for a scenario; deterministic in ``cfg.seed``."""
    cfg.validate()
    frame = LocalFrame(*cfg.origin)
    check_geometry(cfg, frame)
    rngs = stream_rngs(cfg.seed)
    traj = Trajectory(cfg)
    truth = traj.evaluate(epoch_times(cfg))
    mid = sample_midpoints(cfg, traj)
    imu = synthesize_imu(cfg, mid, rngs)
    x_true = true_states(cfg, frame, truth, imu.bias_a, imu.bias_g)
    gnss = synthesize_gnss(cfg, frame, x_true, truth.t, rngs["gnss"])
    controls = synthesize_controls(cfg, mid, rngs["controls"])
    x0 = initial_estimate(cfg, frame, x_true[0], rngs["init"])
    streams = Streams(cfg, frame, truth, x_true, imu, gnss, controls, x0, cfg.noise)
    return inject_faults(streams, cfg.faults, rngs["faults"])


def export_csv(streams: Streams, out_dir: str | Path) -> list[Path]:
    """Write ``truth.csv``, ``imu.csv``, ``gnss.csv`` and ``controls.csv``, time sorted."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tr, imu, ctl = streams.truth, streams.imu, streams.controls
    paths = []

    def _write(name, header, rows):
        path = out / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        paths.append(path)

    _write(
        "truth.csv",
        ["t", "pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d", "yaw", "yaw_rate", "speed", "accel_long"],
        (
            [f"{tr.t[k]:.2f}", *tr.pos[k], *tr.vel[k], tr.yaw[k], tr.yaw_rate[k], tr.speed[k], tr.accel_long[k]]
            for k in range(len(tr))
        ),
    )
    _write(
        "imu.csv",
        ["t", "f_x", "f_y", "f_z", "w_x", "w_y", "w_z"],
        ([f"{imu.t[k]:.2f}", *imu.f[k], *imu.w[k]] for k in range(imu.t.size)),
    )
    _write(
        "gnss.csv",
        ["t", "sat_id", "pseudorange", "deltarange", "cn0", "sat_x", "sat_y", "sat_z", "sat_vn", "sat_ve", "sat_vd"],
        (
            [f"{tr.t[k]:.2f}", o.sat_id, o.pseudorange, o.deltarange, o.cn0, *o.p_es_e, *o.v_es_n]
            for k in sorted(streams.gnss)
            for o in streams.gnss[k]
        ),
    )
    _write(
        "controls.csv",
        ["t", "I", "delta", "v_D"],
        ([f"{ctl.t[k]:.2f}", ctl.I[k], ctl.delta[k], ctl.v_D[k]] for k in range(ctl.t.size)),
    )
    return paths
