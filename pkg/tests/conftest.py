import numpy as np
import pytest


class LinearModel:
    """Time-invariant linear system ``x+ = F x + G w``, ``z = H x + v``."""

    def __init__(self, F, G, Q, H, R):
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.H = np.atleast_2d(np.asarray(H, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.n_e = self.F.shape[0]

    def propagate_state(self, x, u, dt):
        return self.F @ x

    def jacobians(self, x, u, dt):
        return self.F, self.G

    def process_noise(self, dt):
        return self.Q

    def measurement(self, x, obs):
        z = np.atleast_1d(np.asarray(obs, dtype=float))
        return z, self.H @ x, self.H, self.R

    def inject(self, x, dx):
        return x + dx


@pytest.fixture
def scalar_model():
    return LinearModel(1.0, 1.0, 0.04, 1.0, 1.0)


# ---- navigation-model fixtures shared by unit and acceptance tests ----

from robnav.nav.fallback_filter import FallbackFilterModel  # noqa: E402
from robnav.nav.frames import LocalFrame, quat_from_rotvec  # noqa: E402
from robnav.nav.gnss import GnssObservation  # noqa: E402
from robnav.nav.main_filter import ImuSample, MainFilterModel  # noqa: E402

FRAME = LocalFrame(50.78, 6.06, 200.0)
SAT_RANGE = 2.2e7


def random_main_state(rng, frame=FRAME):
    x = np.empty(18)
    x[0:3] = frame.to_ecef(rng.uniform(-200, 200, 3))
    x[3:6] = rng.normal(0, 3, 3)
    x[6:10] = quat_from_rotvec(rng.normal(0, 1.0, 3))
    x[10:13] = rng.normal(0, 0.1, 3)
    x[13:16] = rng.normal(0, 1e-3, 3)
    x[16:18] = rng.normal(0, 50, 2)
    return x


def random_fallback_state(rng, frame=FRAME):
    x = np.empty(8)
    x[0:3] = frame.to_ecef(rng.uniform(-200, 200, 3))
    x[3:6] = rng.normal(0, 3, 3)
    x[6:8] = rng.normal(0, 50, 2)
    return x


def random_imu(rng):
    f = rng.normal(0, 2, 3) + np.array([0.0, 0.0, -9.80665])
    return ImuSample(f, rng.normal(0, 0.3, 3))


def random_observations(rng, frame=FRAME, n=6):
    obs = []
    for i in range(n):
        az = rng.uniform(0, 2 * np.pi)
        el = rng.uniform(0.2, 1.4)
        u = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), -np.sin(el)])
        obs.append(
            GnssObservation(
                f"G{i:02d}",
                frame.to_ecef(SAT_RANGE * u),
                rng.normal(0, 500, 3),
                SAT_RANGE,
                0.0,
                rng.uniform(30, 42),
            )
        )
    return obs


def fd_transition(model, x, u, dt, h=3e-3):
    """
    Central differences of ``f`` over the error state at ``x``.

    Steps are large-ish because ECEF coordinates near 6e6 m cost about 1e-9 m of
    rounding per evaluation.
    """
    x1 = model.propagate_state(x, u, dt)
    n = model.n_e
    J = np.empty((n, n))
    for j in range(n):
        d = np.zeros(n)
        d[j] = h
        plus = model.difference(model.propagate_state(model.inject(x, d), u, dt), x1)
        minus = model.difference(model.propagate_state(model.inject(x, -d), u, dt), x1)
        J[:, j] = (plus - minus) / (2 * h)
    return J


def fd_imu_noise(model, x, u, dt, h=3e-3):
    """Central differences of ``f`` with respect to additive accel and gyro noise."""
    x1 = model.propagate_state(x, u, dt)
    J = np.empty((model.n_e, 6))
    for j in range(6):
        d = np.zeros(6)
        d[j] = h

        def step(s):
            # noise columns describe the error of the compensated measurement: f_true = f_meas - n
            v = ImuSample(u.f_ib_b - s * d[:3], u.w_ib_b - s * d[3:])
            return model.difference(model.propagate_state(x, v, dt), x1)

        J[:, j] = (step(1.0) - step(-1.0)) / (2 * h)
    return J


def fd_measurement(model, x, obs, h=1e-2):
    """Central differences of the predicted observables over the error state."""
    n = model.n_e
    z0 = model.measurement(x, obs)[1]
    J = np.empty((z0.size, n))
    for j in range(n):
        d = np.zeros(n)
        d[j] = h
        J[:, j] = (model.measurement(model.inject(x, d), obs)[1] - model.measurement(model.inject(x, -d), obs)[1]) / (2 * h)
    return J


def max_rel_error(A, B):
    """Largest entry-wise error relative to the larger of 1 and the entry magnitude."""
    return float(np.max(np.abs(A - B) / np.maximum(1.0, np.abs(B))))


@pytest.fixture
def main_model():
    return MainFilterModel(FRAME)


@pytest.fixture
def fallback_model():
    return FallbackFilterModel(FRAME)


# ---- one pass/fail line per acceptance criterion ----

_criteria: dict[int, list[str]] = {}
_details: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n = getattr(report, "criterion", None)
        if n is not None:
            _criteria.setdefault(n, []).append(report.outcome)
            _details.setdefault(n, []).extend(v for k, v in report.user_properties if k == "detail")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok = all(o == "passed" for o in _criteria[n])
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({len(_criteria[n])} checks)")
        for d in _details.get(n, []):
            terminalreporter.write_line(f"    {d}")
