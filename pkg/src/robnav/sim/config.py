"""Scenario configuration and its JSON representation."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from robnav.fault_detection import FdConfig, VehicleParams
from robnav.nav.params import DEG, InitialSigma, NoiseParams


class ConfigError(ValueError):
    """Invalid scenario or sweep configuration."""


@dataclass
class Segment:
    """
    One trajectory piece of fixed duration.

    Speed blends smoothly (C1 cubic) from the entry speed to ``end_speed``;
    ``radius`` of ``None`` is a straight, otherwise a constant-curvature arc
    turning ``"left"`` or ``"right"``.
    """

    duration: float
    end_speed: float | None = None
    radius: float | None = None
    turn: str = "right"

    def curvature(self) -> float:
        if self.radius is None:
            return 0.0
        return (1.0 if self.turn == "right" else -1.0) / self.radius


@dataclass
class Satellite:
    sat_id: str
    azimuth_deg: float
    elevation_deg: float
    cn0: float
    velocity_ned: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass
class FaultInjection:
    kind: str
    start: float = 0.0
    stop: float = 0.0
    sigma: float = 0.0  # m/s^2 for imu_noise_burst
    gyro_sigma: float = 0.0  # rad/s for imu_noise_burst
    degrees: float = 0.0  # yaw_init_error
    overrides: dict[str, Any] = field(default_factory=dict)  # param_falsification

    KINDS = ("imu_noise_burst", "yaw_init_error", "param_falsification")


def default_segments() -> list[Segment]:
    """300 s drive: two large circles, a transfer leg, then repeated small circles."""
    big_r, big_v = 25.0, 4.0
    small_r, small_v = 8.0, 2.5
    big_lap = 2 * math.pi * big_r / big_v
    small_lap = 2 * math.pi * small_r / small_v
    segs = [
        Segment(10.0, end_speed=0.0),
        Segment(5.0, end_speed=big_v),
        Segment(5.0),
        Segment(round(2 * big_lap, 2), radius=big_r, turn="right"),
        Segment(10.0),
        Segment(5.0, end_speed=small_v),
        Segment(round(9 * small_lap, 2), radius=small_r, turn="left"),
        Segment(5.0, end_speed=0.0),
    ]
    used = sum(s.duration for s in segs)
    segs.append(Segment(round(300.0 - used, 2), end_speed=0.0))
    return segs


def default_constellation() -> list[Satellite]:
    geometry = [
        (0.0, 78.0, 42.0),
        (40.0, 35.0, 36.0),
        (95.0, 22.0, 31.0),
        (150.0, 55.0, 40.0),
        (205.0, 28.0, 33.0),
        (255.0, 47.0, 38.0),
        (300.0, 18.0, 30.0),
        (335.0, 40.0, 37.0),
    ]
    return [Satellite(f"G{i + 1:02d}", az, el, cn0) for i, (az, el, cn0) in enumerate(geometry)]


SCENARIO_KEYS = frozenset(
    {"trajectory", "origin", "constellation", "noise", "controls", "vehicle", "faults", "rates", "seed"}
)


@dataclass
class ScenarioConfig:
    segments: list[Segment] = field(default_factory=default_segments)
    initial_heading_deg: float = 0.0
    origin: tuple[float, float, float] = (50.7766, 6.0834, 200.0)
    satellites: list[Satellite] = field(default_factory=default_constellation)
    sat_range: float = 2.2e7  # m
    clock_bias: float = 150.0  # m at t = 0
    clock_drift: float = 0.8  # m/s
    imu_rate: float = 100.0
    gnss_rate: float = 10.0
    control_rate: float = 100.0
    noise: NoiseParams = field(default_factory=NoiseParams)
    fd: FdConfig = field(default_factory=FdConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    faults: list[FaultInjection] = field(default_factory=list)
    bounded_noise: bool = False
    bound_sigma: float = 3.0
    noise_scale: float = 1.0  # multiplies all simulated sensor noise; 0 gives exact streams
    seed: int = 0

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def with_seed(self, seed: int) -> ScenarioConfig:
        out = copy.deepcopy(self)
        out.seed = seed
        return out

    def validate(self) -> None:
        if self.imu_rate != 100.0 or self.gnss_rate != 10.0 or self.control_rate != 100.0:
            raise ConfigError("rates must be IMU 100 Hz, GNSS 10 Hz, controls 100 Hz")
        if len(self.satellites) < 4:
            raise ConfigError("at least 4 satellites are required")
        for i, seg in enumerate(self.segments):
            if not seg.duration > 0.0:
                raise ConfigError(f"segment {i}: duration must be positive")
            steps = seg.duration * self.imu_rate
            if abs(steps - round(steps)) > 1e-6:
                raise ConfigError(f"segment {i}: duration not a multiple of the IMU period")
            if seg.end_speed is not None and seg.end_speed < 0.0:
                raise ConfigError(f"segment {i}: negative speed")
            if seg.radius is not None and not seg.radius > 0.0:
                raise ConfigError(f"segment {i}: radius must be positive")
            if seg.turn not in ("left", "right"):
                raise ConfigError(f"segment {i}: turn must be 'left' or 'right'")
            if seg.radius is not None and math.atan(self.vehicle.L / seg.radius) > 80 * DEG:
                raise ConfigError(f"segment {i}: curvature outside steering range")
        if not self.noise_scale >= 0.0:
            raise ConfigError("noise scale must be non-negative")
        for f in self.faults:
            if f.kind not in FaultInjection.KINDS:
                raise ConfigError(f"unknown fault kind {f.kind!r}")
            if f.kind == "imu_noise_burst" and not (0.0 <= f.start < f.stop <= self.duration):
                raise ConfigError(f"fault window [{f.start}, {f.stop}] outside the scenario")

    # -- JSON ------------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        noise = asdict(self.noise)
        sigma0 = noise.pop("sigma0")
        return {
            "trajectory": {
                "initial_heading_deg": self.initial_heading_deg,
                "segments": [_drop_none(asdict(s)) for s in self.segments],
            },
            "origin": {"lat": self.origin[0], "lon": self.origin[1], "height": self.origin[2]},
            "constellation": {
                "range": self.sat_range,
                "satellites": [asdict(s) for s in self.satellites],
                "clock": {"bias": self.clock_bias, "drift": self.clock_drift},
            },
            "noise": {
                **noise,
                "sigma0": sigma0,
                "bounded": self.bounded_noise,
                "bound_sigma": self.bound_sigma,
                "scale": self.noise_scale,
            },
            "controls": asdict(self.fd),
            "vehicle": asdict(self.vehicle),
            "faults": [_fault_dict(f) for f in self.faults],
            "rates": {"imu": self.imu_rate, "gnss": self.gnss_rate, "controls": self.control_rate},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ScenarioConfig:
        cfg = cls()
        unknown = set(d) - SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
        try:
            if "trajectory" in d:
                tr = d["trajectory"]
                cfg.initial_heading_deg = float(tr.get("initial_heading_deg", 0.0))
                if "segments" in tr:
                    cfg.segments = [Segment(**s) for s in tr["segments"]]
            if "origin" in d:
                o = d["origin"]
                cfg.origin = (float(o["lat"]), float(o["lon"]), float(o.get("height", 0.0)))
            if "constellation" in d:
                c = d["constellation"]
                cfg.sat_range = float(c.get("range", cfg.sat_range))
                if "satellites" in c:
                    cfg.satellites = [
                        Satellite(**{**s, "velocity_ned": tuple(s.get("velocity_ned", (0, 0, 0)))})
                        for s in c["satellites"]
                    ]
                clk = c.get("clock", {})
                cfg.clock_bias = float(clk.get("bias", cfg.clock_bias))
                cfg.clock_drift = float(clk.get("drift", cfg.clock_drift))
            if "noise" in d:
                n = dict(d["noise"])
                cfg.bounded_noise = bool(n.pop("bounded", False))
                cfg.bound_sigma = float(n.pop("bound_sigma", 3.0))
                cfg.noise_scale = float(n.pop("scale", 1.0))
                cfg.noise = noise_from_dict(n)
            if "controls" in d:
                cfg.fd = FdConfig(**d["controls"])
            if "vehicle" in d:
                cfg.vehicle = VehicleParams(**d["vehicle"])
            if "faults" in d:
                cfg.faults = [FaultInjection(**f) for f in d["faults"]]
            if "rates" in d:
                r = d["rates"]
                cfg.imu_rate = float(r.get("imu", 100.0))
                cfg.gnss_rate = float(r.get("gnss", 10.0))
                cfg.control_rate = float(r.get("controls", 100.0))
            cfg.seed = int(d.get("seed", 0))
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"malformed scenario: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> ScenarioConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def noise_from_dict(n: dict[str, Any]) -> NoiseParams:
    n = dict(n)
    sigma0 = n.pop("sigma0", None)
    if "fallback_accel" in n:
        n["fallback_accel"] = tuple(n["fallback_accel"])
    s0 = InitialSigma()
    if sigma0 is not None:
        sigma0 = dict(sigma0)
        if "pos" in sigma0:
            sigma0["pos"] = tuple(sigma0["pos"])
        s0 = InitialSigma(**sigma0)
    return NoiseParams(**n, sigma0=s0)


def apply_overrides(noise: NoiseParams, overrides: dict[str, Any]) -> NoiseParams:
    """Copy of ``noise`` with top-level fields or ``sigma0.<field>`` keys replaced."""
    out = copy.deepcopy(noise)
    s0_names = {f.name for f in fields(InitialSigma)}
    names = {f.name for f in fields(NoiseParams)}
    for key, val in overrides.items():
        if key.startswith("sigma0."):
            sub = key.split(".", 1)[1]
            if sub not in s0_names:
                raise ConfigError(f"unknown initial-sigma field {sub!r}")
            setattr(out.sigma0, sub, tuple(val) if isinstance(val, list) else val)
        elif key in names:
            setattr(out, key, tuple(val) if isinstance(val, list) else val)
        else:
            raise ConfigError(f"unknown noise parameter {key!r}")
    out.__post_init__()
    return out


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _fault_dict(f: FaultInjection) -> dict[str, Any]:
    d = asdict(f)
    keep = {
        "imu_noise_burst": ("kind", "start", "stop", "sigma", "gyro_sigma"),
        "yaw_init_error": ("kind", "degrees"),
        "param_falsification": ("kind", "overrides"),
    }[f.kind]
    return {k: d[k] for k in keep}
