"""
End-to-end navigation and integrity pipeline.

Per IMU epoch: the IMU sample is checked against the vehicle model, the
supervisor picks the active filter, the active filter and its error zonotope are
propagated and, on GNSS epochs, updated. Protection levels always come from the
active filter's zonotope.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.signal import lfilter

from robnav.fault_detection import Supervisor, compensated_imu, detect_fault, thresholds
from robnav.filtering import (
    FilterDivergence,
    FilterEstimate,
    GammaInfeasible,
    RobustConfig,
    RobustFilter,
    check_feasibility,
)
from robnav.metrics import compute_metrics, pl_consistency
from robnav.nav.fallback_filter import FallbackFilterModel
from robnav.nav.frames import euler_from_quat, quat_from_rotvec, quat_mult
from robnav.nav.main_filter import EA, MAIN_TO_FALLBACK, MainFilterModel
from robnav.protection import ErrorZonotope, PlConfig, ZonotopeBounder, initial_error_zonotope
from robnav.sim.config import ScenarioConfig
from robnav.sim.sensors import Streams, simulate
from robnav.zonotope import reduce_generators

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1000.0  # m, 3D error
DIVERGENCE_EPOCHS = 10
LOWPASS_TAU = 0.5  # s, diagnostic column only

COLUMNS = (
    "t",
    "active_filter",
    "est_n", "est_e", "est_d",
    "true_n", "true_e", "true_d",
    "est_vn", "est_ve", "est_vd",
    "true_vn", "true_ve", "true_vd",
    "est_yaw", "true_yaw",
    "err_n", "err_e", "err_d",
    "err_2d", "err_3d",
    "pl_n", "pl_e", "pl_d",
    "accel_fault", "yaw_fault",
    "f_x", "a_lo", "a_hi",
    "w_z", "yaw_lo", "yaw_hi",
    "f_x_lowpass",
    "gamma", "feasible",
    "n_meas", "n_gated",
    "zono_ms",
)  # fmt: skip


@dataclass
class RunOptions:
    """
    Pipeline switches.

    ``pl=None`` skips the zonotope bound (faster accuracy-only runs).
    ``force_fallback`` runs the GNSS-only filter from the first epoch.
    ``safety`` is far above the filter-level default: with a margin of 2 the
    first GNSS epochs from a loose prior are infeasible and the bound doubles
    several times, spiking the estimate.
    """

    mode: str = "ehf"
    fd: bool = True
    pl: PlConfig | None = field(default_factory=PlConfig)
    safety: float = 100.0
    gamma_policy: str = "fixed"
    gate_sigma: float = 5.0
    force_fallback: bool = False


@dataclass
class RunReport:
    """Per-epoch rows (columnar) and the summary derived from them."""

    columns: dict[str, NDArray]
    summary: dict[str, Any]
    events: list[str]
    diverged: bool = False
    divergence_time: float | None = None

    @property
    def n_rows(self) -> int:
        return int(self.columns["t"].size)

    def column(self, name: str) -> NDArray:
        return self.columns[name]

    def errors_ned(self) -> NDArray:
        return np.column_stack([self.columns[c] for c in ("err_n", "err_e", "err_d")])

    def pl_ned(self) -> NDArray:
        return np.column_stack([self.columns[c] for c in ("pl_n", "pl_e", "pl_d")])

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for k in range(self.n_rows):
                w.writerow([_fmt(self.columns[c][k]) for c in COLUMNS])

    def write_summary(self, path: str | Path) -> None:
        doc = {**self.summary, "diverged": self.diverged, "divergence_time": self.divergence_time, "events": self.events}
        Path(path).write_text(json.dumps(doc, indent=2, default=_json_default))


BOOL_COLUMNS = ("accel_fault", "yaw_fault", "feasible")
INT_COLUMNS = ("n_meas", "n_gated")


def read_columns(path: str | Path) -> dict[str, NDArray]:
    """Read the rows of a report CSV back into typed columns."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != COLUMNS:
        raise ValueError(f"{path}: unexpected report columns")
    cols: dict[str, NDArray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in body]
        if name == "active_filter":
            cols[name] = np.array(raw, dtype=str)
        elif name in BOOL_COLUMNS:
            cols[name] = np.array([v == "1" for v in raw], dtype=bool)
        elif name in INT_COLUMNS:
            cols[name] = np.array(raw, dtype=int)
        else:
            cols[name] = np.array(raw, dtype=float)
    return cols


def _fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


class _Recorder:
    def __init__(self, n: int) -> None:
        self.data = {c: np.full(n, np.nan) for c in COLUMNS}
        self.data["active_filter"] = np.empty(n, dtype=object)
        self.n = 0

    def add(self, **row) -> None:
        k = self.n
        for c, v in row.items():
            self.data[c][k] = v
        self.n += 1

    def finish(self) -> dict[str, NDArray]:
        out = {c: v[: self.n] for c, v in self.data.items()}
        out["active_filter"] = out["active_filter"].astype(str)
        for c in BOOL_COLUMNS:
            out[c] = out[c].astype(bool)
        for c in INT_COLUMNS:
            out[c] = out[c].astype(int)
        return out


def _gate(z, z_pred, H, R, P, n_sigma: float):
    """Drop rows whose innovation exceeds ``n_sigma`` predicted standard deviations."""
    nu = z - z_pred
    s = np.sqrt(np.einsum("ij,jk,ik->i", H, P, H) + np.diag(R))
    keep = np.abs(nu) <= n_sigma * s
    idx = np.flatnonzero(keep)
    return (z[idx], z_pred[idx], H[idx], R[np.ix_(idx, idx)]), int((~keep).sum())


class _Lane:
    """A filter with its optional error zonotope."""

    def __init__(self, name: str, filt: RobustFilter, bounder: ZonotopeBounder | None) -> None:
        self.name = name
        self.filter = filt
        self.bounder = bounder
        self.zono_time = 0.0

    def propagate(self, u, dt: float) -> None:
        pred = self.filter.propagate(u, dt)
        if self.bounder is not None:
            t0 = time.perf_counter()
            self.bounder.propagate(pred.F, pred.G, pred.Q)
            self.zono_time += time.perf_counter() - t0

    def update(self, obs, gate_sigma: float) -> tuple[int, int, bool]:
        f = self.filter
        measured = f.model.measurement(f.estimate.x, obs)
        measured, n_gated = _gate(*measured, f.estimate.P, gate_sigma)
        H, R = measured[2], measured[3]
        feasible = True
        if f.config.mode == "ehf" and H.shape[0] and f.gamma is not None:
            feasible = check_feasibility(f.estimate.P, H, R, f.config.L, f.gamma)
        corr = f.update(obs, measured=measured)
        if f.config.mode == "ehf" and f.config.gamma_policy == "fixed":
            feasible = feasible and f.last_feasible
        if self.bounder is not None and H.shape[0]:
            t0 = time.perf_counter()
            self.bounder.update(corr.K, H, R)
            self.zono_time += time.perf_counter() - t0
        return H.shape[0], n_gated, feasible

    def pl(self) -> NDArray:
        if self.bounder is None:
            return np.full(3, np.nan)
        return self.bounder.pl((0, 1, 2))


def _robust_config(opts: RunOptions) -> RobustConfig:
    return RobustConfig(mode=opts.mode, safety=opts.safety, gamma_policy=opts.gamma_policy)


def _main_lane(streams: Streams, opts: RunOptions, model: MainFilterModel) -> _Lane:
    sigma0 = streams.filter_noise.sigma0
    est = FilterEstimate(streams.x0.copy(), model.initial_covariance(sigma0))
    bounder = None
    if opts.pl is not None:
        E0 = initial_error_zonotope(sigma0.main_vector(), opts.pl)
        bounder = ZonotopeBounder(E0, opts.pl)
    return _Lane("main", RobustFilter(model, est, _robust_config(opts)), bounder)


def _fallback_from_main(main: _Lane, model: FallbackFilterModel, opts: RunOptions) -> _Lane:
    ix = list(MAIN_TO_FALLBACK)
    xm, Pm = main.filter.estimate.x, main.filter.estimate.P
    x = np.r_[xm[0:3], xm[3:6], xm[16], xm[17]]
    est = FilterEstimate(x, Pm[np.ix_(ix, ix)].copy(), main.filter.estimate.k)
    bounder = None
    if main.bounder is not None:
        bounder = ZonotopeBounder(main.bounder.E.select(ix), opts.pl)
    filt = RobustFilter(model, est, _robust_config(opts))
    return _Lane("fallback", filt, bounder)


def _reseed_main(main: _Lane, fb: _Lane, held: tuple[NDArray, NDArray, ErrorZonotope | None]) -> None:
    """
    Restore the main filter after a fallback period.

    Position, velocity and clock come from the fallback filter; attitude from
    gyro integration during the fallback period; biases keep their pre-fault
    values. Attitude and bias uncertainty restart from the pre-fault values,
    with the attitude block reset to at least its initial level.
    """
    ix = list(MAIN_TO_FALLBACK)
    P_held, P0, E_held = held
    x = main.filter.estimate.x.copy()
    xf = fb.filter.estimate.x
    x[0:6] = xf[0:6]
    x[16:18] = xf[6:8]
    rest = [i for i in range(17) if i not in ix]
    P = np.zeros((17, 17))
    P[np.ix_(ix, ix)] = fb.filter.estimate.P
    P_rest = P_held[np.ix_(rest, rest)].copy()
    att = [rest.index(i) for i in range(EA.start, EA.stop)]
    P_rest[np.ix_(att, att)] = np.maximum(P_rest[np.ix_(att, att)], P0[np.ix_(att, att)])
    P[np.ix_(rest, rest)] = P_rest
    main.filter.estimate = FilterEstimate(x, P, fb.filter.estimate.k)
    if main.bounder is not None:
        Ef = fb.bounder.E.E
        Er = E_held.E[rest, :]
        att_rows = [rest.index(i) for i in range(EA.start, EA.stop)]
        r0 = np.sqrt(np.diag(P0))[EA] * main.bounder.cfg.n_sigma_z
        Er = Er.copy()
        Er[att_rows, :] = 0.0
        G = np.zeros((17, Ef.shape[1] + Er.shape[1] + 3))
        G[ix, : Ef.shape[1]] = Ef
        G[rest, Ef.shape[1] : Ef.shape[1] + Er.shape[1]] = Er
        r_held = np.abs(E_held.E[EA, :]).sum(axis=1)
        G[list(range(EA.start, EA.stop)), Ef.shape[1] + Er.shape[1] :] = np.diag(np.maximum(r_held, r0))
        main.bounder.E = ErrorZonotope(reduce_generators(G, main.bounder.cfg.q))


def _attitude_only(x: NDArray, w_ib_b: NDArray, dt: float) -> NDArray:
    out = x.copy()
    q = quat_mult(x[6:10], quat_from_rotvec((w_ib_b - x[13:16]) * dt))
    out[6:10] = q / np.linalg.norm(q)
    return out


def run_streams(streams: Streams, opts: RunOptions | None = None) -> RunReport:
    """Run the navigation pipeline over pre-generated sensor streams."""
    opts = opts or RunOptions()
    cfg = streams.cfg
    frame = streams.frame
    noise = streams.filter_noise
    main_model = MainFilterModel(frame, noise)
    fb_model = FallbackFilterModel(frame, noise)
    main = _main_lane(streams, opts, main_model)
    P0 = main.filter.estimate.P.copy()
    lanes = {"main": main}
    held = None
    if opts.force_fallback:
        lanes["fallback"] = _fallback_from_main(main, fb_model, opts)
    sup = Supervisor(cfg.fd)
    N = streams.n_epochs
    dt = 1.0 / cfg.imu_rate
    rec = _Recorder(N)
    events = list(streams.events)
    bad = 0
    diverged = False
    div_time = None

    for k in range(N):
        t = float(streams.truth.t[k])
        # fault detection on the incoming IMU sample
        xm = main.filter.estimate.x
        f_x, w_z = compensated_imu(streams.imu.f[k, 0], streams.imu.w[k, 2], xm[10], xm[15])
        a_thr, y_thr = thresholds(streams.controls.sample(k), cfg.vehicle, cfg.fd)
        flag = detect_fault(f_x, w_z, a_thr, y_thr, epoch=k)
        if opts.force_fallback:
            active = "fallback"
        elif opts.fd:
            prev = sup.active
            active = sup.step(t, flag.any)
            if active != prev:
                events.append(f"t={t:.2f} s: switch to {active}")
                if active == "fallback":
                    held = (main.filter.estimate.P.copy(), P0, main.bounder.E if main.bounder else None)
                    lanes["fallback"] = _fallback_from_main(main, fb_model, opts)
                else:
                    _reseed_main(main, lanes.pop("fallback"), held)
        else:
            active = "main"
        lane = lanes[active]

        z0 = lane.zono_time
        n_meas = n_gated = 0
        feasible = True
        try:
            if k > 0:
                if active == "main":
                    lane.propagate(streams.imu.sample(k), dt)
                else:
                    lane.propagate(None, dt)
                    main.filter.estimate.x = _attitude_only(main.filter.estimate.x, streams.imu.w[k], dt)
            if k in streams.gnss:
                n_meas, n_gated, feasible = lane.update(streams.gnss[k], opts.gate_sigma)
        except (FilterDivergence, GammaInfeasible, np.linalg.LinAlgError) as exc:
            events.append(f"t={t:.2f} s: {exc}")
            diverged, div_time = True, t
            break
        zono_ms = 1e3 * (lane.zono_time - z0) if lane.bounder is not None else np.nan

        x = lane.filter.estimate.x
        est_p = frame.to_ned(x[0:3])
        true_p = frame.to_ned(streams.x_true[k, 0:3])
        err = true_p - est_p
        e3 = float(np.linalg.norm(err))
        if not np.all(np.isfinite(x)) or not e3 <= DIVERGENCE_LIMIT:
            bad += 1
        else:
            bad = 0
        pl = lane.pl()
        yaw = euler_from_quat(main.filter.estimate.x[6:10])[2]
        rec.add(
            t=t,
            active_filter=active,
            est_n=est_p[0], est_e=est_p[1], est_d=est_p[2],
            true_n=true_p[0], true_e=true_p[1], true_d=true_p[2],
            est_vn=x[3], est_ve=x[4], est_vd=x[5],
            true_vn=streams.x_true[k, 3], true_ve=streams.x_true[k, 4], true_vd=streams.x_true[k, 5],
            est_yaw=yaw, true_yaw=streams.truth.yaw[k],
            err_n=err[0], err_e=err[1], err_d=err[2],
            err_2d=math.hypot(err[0], err[1]), err_3d=e3,
            pl_n=pl[0], pl_e=pl[1], pl_d=pl[2],
            accel_fault=flag.accel_fault, yaw_fault=flag.yaw_fault,
            f_x=f_x, a_lo=a_thr.lo, a_hi=a_thr.hi,
            w_z=w_z, yaw_lo=y_thr.lo, yaw_hi=y_thr.hi,
            gamma=lane.filter.gamma if lane.filter.gamma is not None else np.nan,
            feasible=feasible,
            n_meas=n_meas, n_gated=n_gated,
            zono_ms=zono_ms,
        )  # fmt: skip
        if bad >= DIVERGENCE_EPOCHS:
            diverged, div_time = True, t
            events.append(f"t={t:.2f} s: divergence, 3D error above {DIVERGENCE_LIMIT:g} m")
            break

    cols = rec.finish()
    a = dt / (LOWPASS_TAU + dt)
    cols["f_x_lowpass"] = lfilter([a], [1.0, a - 1.0], cols["f_x"])
    for lane in lanes.values():
        events.extend(f"{lane.name}: {msg}" for _, msg in lane.filter.events)
    summary = summarize(cols, cfg)
    summary["mode"] = opts.mode
    summary["fd"] = opts.fd
    summary["q"] = opts.pl.q if opts.pl else None
    summary["n_sigma_z"] = opts.pl.n_sigma_z if opts.pl else None
    summary["seed"] = cfg.seed
    return RunReport(cols, summary, events, diverged, div_time)


def burst_windows(cfg: ScenarioConfig) -> list[tuple[float, float]]:
    return [(f.start, f.stop) for f in cfg.faults if f.kind == "imu_noise_burst"]


def in_windows(t: NDArray, windows) -> NDArray:
    m = np.zeros(t.shape, dtype=bool)
    for a, b in windows:
        m |= (t >= a) & (t < b)
    return m


def summarize(cols: dict[str, NDArray], cfg: ScenarioConfig) -> dict[str, Any]:
    """Summary indicators; a pure function of the rows and the scenario's fault windows."""
    out: dict[str, Any] = {"epochs": int(cols["t"].size)}
    if cols["t"].size == 0:
        return out
    out["error_2d"] = compute_metrics(cols["err_2d"]).as_dict()
    out["error_3d"] = compute_metrics(cols["err_3d"]).as_dict()
    err = np.column_stack([cols[c] for c in ("err_n", "err_e", "err_d")])
    pl = np.column_stack([cols[c] for c in ("pl_n", "pl_e", "pl_d")])
    if np.all(np.isfinite(pl)):
        c = pl_consistency(err, pl)
        out["pl_containment"] = c.containment
        out["pl_axis_containment"] = list(c.axis_containment)
        out["pl_mean_width"] = list(c.mean_width)
    t = cols["t"]
    fault = cols["accel_fault"] | cols["yaw_fault"]
    windows = burst_windows(cfg)
    latencies = []
    for a, b in windows:
        hits = np.flatnonzero(fault & (t >= a) & (t < b))
        latencies.append(float(t[hits[0]] - a) if hits.size else None)
    out["detection_latency"] = latencies
    out["false_alarms"] = int(np.sum(fault & ~in_windows(t, windows)))
    out["fallback_epochs"] = int(np.sum(cols["active_filter"] == "fallback"))
    out["infeasible_epochs"] = int(np.sum(~cols["feasible"]))
    if windows:
        m = in_windows(t, windows)
        if m.any():
            out["burst_error_3d"] = compute_metrics(cols["err_3d"][m]).as_dict()
    ms = cols["zono_ms"][np.isfinite(cols["zono_ms"])]
    if ms.size:
        out["zonotope_ms"] = {
            "median": float(np.median(ms)),
            "mean": float(ms.mean()),
            "max": float(ms.max()),
            "total_s": float(ms.sum() / 1e3),
        }
    return out


def run_scenario(
    scenario: ScenarioConfig | str | Path,
    mode: str = "ehf",
    pl: PlConfig | None = None,
    fd: bool = True,
    **kwargs,
) -> RunReport:
    """Simulate a scenario (config object or JSON file) and run the pipeline on it."""
    cfg = scenario if isinstance(scenario, ScenarioConfig) else ScenarioConfig.load(scenario)
    opts = RunOptions(mode=mode, fd=fd, pl=pl if pl is not None else PlConfig(), **kwargs)
    return run_streams(simulate(cfg), opts)


def options_dict(opts: RunOptions) -> dict[str, Any]:
    return asdict(opts)
