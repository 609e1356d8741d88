"""Parameter sweeps: filter comparison across settings and the reduction-order sweep."""

from __future__ import annotations

import copy
import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from robnav.pipeline import RunOptions, RunReport, run_streams
from robnav.protection import PlConfig
from robnav.sim.config import ConfigError, FaultInjection, ScenarioConfig
from robnav.sim.sensors import simulate


def default_settings() -> dict[str, list[dict[str, Any]]]:
    """The seven comparison settings as fault-injection lists applied to the base scenario."""
    return {
        "01": [],
        "02": [{"kind": "yaw_init_error", "degrees": 30.0}],
        "03": [{"kind": "yaw_init_error", "degrees": 60.0}],
        "04": [{"kind": "param_falsification", "overrides": {"C_rho": 180.0, "C_d": 6.0}}],
        "05": [{"kind": "param_falsification", "overrides": {"C_rho": 30.0, "C_d": 1.0}}],
        "06": [{"kind": "param_falsification", "overrides": {"sigma0.pos": [0.02, 0.02, 0.05]}}],
        "07": [{"kind": "param_falsification", "overrides": {"sigma0.pos": [1.0, 1.0, 2.0]}}],
    }


SPEC_KEYS = frozenset({"base", "settings", "modes", "q_values", "q_filter", "pl", "options"})


@dataclass
class SweepSpec:
    """
    Base scenario plus named overrides.

    ``settings`` maps a setting name to extra fault injections; ``q_values``
    requests a reduction-order sweep on the base scenario.
    """

    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    settings: dict[str, list[dict[str, Any]]] = field(default_factory=default_settings)
    modes: tuple[str, ...] = ("ekf", "ehf")
    q_values: tuple[int, ...] = ()
    q_filter: str = "main"  # or "fallback"
    pl: bool = False  # zonotope bound during the settings sweep
    options: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: Path | None = None) -> SweepSpec:
        spec = cls()
        unknown = set(d) - SPEC_KEYS
        if unknown:
            raise ConfigError(f"unknown sweep keys {sorted(unknown)}")
        try:
            base = d.get("base")
            if isinstance(base, str):
                path = Path(base)
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                spec.base = ScenarioConfig.load(path)
            elif isinstance(base, dict):
                spec.base = ScenarioConfig.from_dict(base)
            if "settings" in d:
                spec.settings = {str(k): list(v) for k, v in d["settings"].items()}
            spec.modes = tuple(d.get("modes", spec.modes))
            spec.q_values = tuple(int(q) for q in d.get("q_values", ()))
            spec.q_filter = d.get("q_filter", "main")
            spec.pl = bool(d.get("pl", False))
            spec.options = dict(d.get("options", {}))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"malformed sweep spec: {exc}") from exc
        if spec.q_filter not in ("main", "fallback"):
            raise ConfigError("q_filter must be 'main' or 'fallback'")
        for mode in spec.modes:
            if mode not in ("ekf", "ehf"):
                raise ConfigError(f"unknown filter mode {mode!r}")
        spec.check_disjoint()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> SweepSpec:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, path.parent)

    def check_disjoint(self) -> None:
        """Within one setting no parameter may be overridden twice."""
        for name, faults in self.settings.items():
            seen: set[str] = set()
            for f in faults:
                keys = set(f.get("overrides", {})) if f.get("kind") == "param_falsification" else {f.get("kind", "")}
                if seen & keys:
                    raise ConfigError(f"setting {name}: overlapping overrides {sorted(seen & keys)}")
                seen |= keys

    def scenario(self, name: str) -> ScenarioConfig:
        cfg = copy.deepcopy(self.base)
        try:
            cfg.faults = cfg.faults + [FaultInjection(**f) for f in self.settings[name]]
        except TypeError as exc:
            raise ConfigError(f"setting {name}: {exc}") from exc
        cfg.validate()
        return cfg


TABLE_FIELDS = ("mean", "sigma", "rms", "p95")


def settings_sweep(spec: SweepSpec) -> list[dict[str, Any]]:
    """
    Run every setting under every filter mode.

    Fault detection is off unless ``options`` turns it on, so the table compares
    the filters themselves rather than the fallback path. A diverged run is
    recorded with ``diverged=True`` and the sweep continues.
    Returns one row per (setting, mode).
    """
    rows = []
    options = {"fd": False, **spec.options}
    for name in spec.settings:
        streams = simulate(spec.scenario(name))
        for mode in spec.modes:
            opts = RunOptions(mode=mode, pl=PlConfig() if spec.pl else None, **options)
            report = run_streams(streams, opts)
            rows.append(_table_row(name, mode, report))
    return rows


def _table_row(name: str, mode: str, report: RunReport) -> dict[str, Any]:
    row: dict[str, Any] = {"setting": name, "filter": mode, "diverged": report.diverged}
    for dim in ("2d", "3d"):
        m = report.summary.get(f"error_{dim}", {})
        for f in TABLE_FIELDS:
            row[f"{dim}_{f}"] = float("nan") if report.diverged else m.get(f, float("nan"))
    return row


def write_table(rows: list[dict[str, Any]], path: str | Path) -> None:
    """Comparison table with one line per setting, filters side by side."""
    modes = sorted({r["filter"] for r in rows}, key=lambda m: ("ekf", "ehf").index(m))
    header = ["setting"]
    for dim in ("2d", "3d"):
        for m in modes:
            header += [f"{dim}_{m}_{f}" for f in TABLE_FIELDS]
    by = {(r["setting"], r["filter"]): r for r in rows}
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for name in dict.fromkeys(r["setting"] for r in rows):
            line = [name]
            for dim in ("2d", "3d"):
                for m in modes:
                    r = by[(name, m)]
                    line += ["divergent" if r["diverged"] else f"{r[f'{dim}_{f}']:.4f}" for f in TABLE_FIELDS]
            w.writerow(line)


def q_sweep(spec: SweepSpec) -> list[dict[str, Any]]:
    """
    Protection-level width and zonotope run time for each reduction order.

    All orders replay the same streams with the same filter, so gains are identical
    and only the bound changes.
    """
    streams = simulate(spec.base)
    rows = []
    for q in spec.q_values:
        opts = RunOptions(
            mode=spec.options.get("mode", "ehf"),
            pl=PlConfig(q=q),
            force_fallback=spec.q_filter == "fallback",
            **{k: v for k, v in spec.options.items() if k != "mode"},
        )
        t0 = time.perf_counter()
        report = run_streams(streams, opts)
        wall = time.perf_counter() - t0
        z = report.summary.get("zonotope_ms", {})
        width = report.summary.get("pl_mean_width", [float("nan")] * 3)
        rows.append(
            {
                "q": q,
                "filter": spec.q_filter,
                "pl_mean_n": width[0] / 2,
                "pl_mean_e": width[1] / 2,
                "pl_mean_d": width[2] / 2,
                "containment": report.summary.get("pl_containment", float("nan")),
                "zonotope_s": z.get("total_s", float("nan")),
                "zonotope_median_ms": z.get("median", float("nan")),
                "run_s": wall,
            }
        )
    return rows


def write_rows(rows: list[dict[str, Any]], path: str | Path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
