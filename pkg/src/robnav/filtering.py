"""
Extended Kalman / extended H-infinity recursion over a generic error-state model.

The recursion is written against :class:`FilterModel`, so the same code runs the
tightly coupled navigation filter, the GNSS-only fallback filter and the small
linear systems used in tests. Propagation and correction return the matrices they
used (``F``, ``G``, ``K``, ``H``) so that set-based error bounds can follow the
filter without re-linearizing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Protocol, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, LinAlgError

log = logging.getLogger(__name__)

GAMMA_BRACKET = (1e-6, 1e9)
GAMMA_BISECTIONS = 50


class FilterDivergence(RuntimeError):
    """Raised when the state or the innovation becomes non-finite."""


class GammaInfeasible(RuntimeError):
    """Raised when the H-infinity existence condition fails for the chosen bound."""


class FilterModel(Protocol):
    """
    Interface a process/measurement model offers to the recursion.

    States may live on a manifold (e.g. carry a quaternion); the covariance is
    always expressed in the ``n_e``-dimensional error space and corrections are
    applied through :meth:`inject`.
    """

    n_e: int

    def propagate_state(self, x: NDArray, u: Any, dt: float) -> NDArray: ...

    def jacobians(self, x: NDArray, u: Any, dt: float) -> tuple[NDArray, NDArray]: ...

    def process_noise(self, dt: float) -> NDArray: ...

    def measurement(self, x: NDArray, obs: Any) -> tuple[NDArray, NDArray, NDArray, NDArray]:
        """Return ``(z, z_pred, H, R)`` for the observation set ``obs``."""
        ...

    def inject(self, x: NDArray, dx: NDArray) -> NDArray: ...


@dataclass
class FilterEstimate:
    """State estimate with error covariance at epoch ``k``."""

    x: NDArray
    P: NDArray
    k: int = 0

    def copy(self) -> FilterEstimate:
        return FilterEstimate(self.x.copy(), self.P.copy(), self.k)


@dataclass
class RobustConfig:
    """
    Filter mode and H-infinity settings.

    ``gamma="auto"`` selects the bound with :func:`select_gamma` using ``safety``.
    ``gamma_policy`` is ``"fixed"`` (select once, double on infeasibility) or
    ``"epoch"`` (reselect at every measurement update).
    """

    mode: str = "ehf"
    gamma: float | str = "auto"
    safety: float = 2.0
    gamma_policy: str = "fixed"
    L: NDArray | None = None

    def __post_init__(self) -> None:
        self.mode = self.mode.lower()
        if self.mode not in ("ekf", "ehf"):
            raise ValueError(f"unknown filter mode {self.mode!r}")
        if self.gamma != "auto" and not float(self.gamma) > 0.0:
            raise ValueError("gamma must be positive")
        if self.safety <= 1.0:
            raise ValueError("safety factor must exceed 1")
        if self.gamma_policy not in ("fixed", "epoch"):
            raise ValueError(f"unknown gamma policy {self.gamma_policy!r}")


class Prediction(NamedTuple):
    estimate: FilterEstimate
    F: NDArray
    G: NDArray
    Q: NDArray


class Correction(NamedTuple):
    estimate: FilterEstimate
    K: NDArray
    H: NDArray
    R: NDArray
    innovation: NDArray


def symmetrize(P: NDArray) -> NDArray:
    return 0.5 * (P + P.T)


def _check_finite(x: NDArray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise FilterDivergence(f"filter divergence: non-finite {what}")


def propagate(model: FilterModel, est: FilterEstimate, u: Any, dt: float) -> Prediction:
    """Time update ``x- = f(x+)``, ``P- = F P+ F' + G Q G'``."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    F, G = model.jacobians(est.x, u, dt)
    x = model.propagate_state(est.x, u, dt)
    _check_finite(x, "state")
    Q = model.process_noise(dt)
    P = symmetrize(F @ est.P @ F.T + G @ Q @ G.T)
    return Prediction(FilterEstimate(x, P, est.k + 1), F, G, Q)


def check_feasibility(
    P_prior: NDArray, H: NDArray, R: NDArray, L: NDArray | None, gamma: float
) -> bool:
    """
    Existence condition ``inv(P-) + H' inv(R) H - L' L / gamma > 0``.

    Tested by attempting a Cholesky factorization.
    """
    info = np.linalg.inv(P_prior) + H.T @ np.linalg.solve(R, H)
    if L is not None:
        info = info - (L.T @ L) / gamma
    else:
        info = info - np.eye(info.shape[0]) / gamma
    try:
        cho_factor(symmetrize(info), lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        return False
    return True


def select_gamma(
    P_prior: NDArray,
    H: NDArray,
    R: NDArray,
    L: NDArray | None = None,
    safety: float = 2.0,
    bracket: tuple[float, float] = GAMMA_BRACKET,
    iterations: int = GAMMA_BISECTIONS,
) -> float:
    """
    Smallest feasible performance bound (by bisection) times ``safety``.

    Raises
    ------
    GammaInfeasible
        If even the upper end of the bracket fails the existence condition.
    """
    lo, hi = bracket
    if check_feasibility(P_prior, H, R, L, lo):
        gamma_min = lo
    else:
        if not check_feasibility(P_prior, H, R, L, hi):
            raise GammaInfeasible("feasibility bracket exhausted")
        # bisect in log space; the bracket spans 15 decades
        a, b = np.log(lo), np.log(hi)
        for _ in range(iterations):
            mid = 0.5 * (a + b)
            if check_feasibility(P_prior, H, R, L, float(np.exp(mid))):
                b = mid
            else:
                a = mid
        gamma_min = float(np.exp(b))
    gamma = safety * gamma_min
    while not check_feasibility(P_prior, H, R, L, gamma):
        gamma *= 2.0
    return gamma


def _apply_correction(
    model: FilterModel, est: FilterEstimate, K: NDArray, innovation: NDArray, P: NDArray
) -> FilterEstimate:
    dx = K @ innovation
    _check_finite(dx, "correction")
    return FilterEstimate(model.inject(est.x, dx), symmetrize(P), est.k)


def update_ekf(model: FilterModel, est: FilterEstimate, obs: Any, measured=None) -> Correction:
    """Kalman measurement update with the Joseph-form covariance."""
    z, z_pred, H, R = measured if measured is not None else model.measurement(est.x, obs)
    innovation = z - z_pred
    _check_finite(innovation, "innovation")
    P = est.P
    if H.shape[0] == 0:
        return Correction(est, np.zeros((P.shape[0], 0)), H, R, innovation)
    PHt = P @ H.T
    S = H @ PHt + R
    K = np.linalg.solve(S, PHt.T).T
    A = np.eye(P.shape[0]) - K @ H
    P_post = A @ P @ A.T + K @ R @ K.T
    return Correction(_apply_correction(model, est, K, innovation, P_post), K, H, R, innovation)


def update_ehf(
    model: FilterModel,
    est: FilterEstimate,
    obs: Any,
    gamma: float,
    L: NDArray | None = None,
    measured=None,
) -> Correction:
    """
    H-infinity measurement update.

    ``P+ = P- [I - L'L P- / gamma + H' inv(R) H P-]^-1``, ``K = P+ H' inv(R)``.

    Raises
    ------
    GammaInfeasible
        If the existence condition fails at this epoch.
    """
    z, z_pred, H, R = measured if measured is not None else model.measurement(est.x, obs)
    innovation = z - z_pred
    _check_finite(innovation, "innovation")
    P = est.P
    n = P.shape[0]
    if H.shape[0] == 0:
        return Correction(est, np.zeros((n, 0)), H, R, innovation)
    if not check_feasibility(P, H, R, L, gamma):
        raise GammaInfeasible(f"gamma infeasible at epoch {est.k}")
    # Same P+ and K in stacked form: C = [H; L], Re = diag(R, -gamma I),
    # P+ = P - P C' inv(Re + C P C') C P and K = P+ H' inv(R) = first m columns of P C' inv(Re + C P C').
    # Avoids inverting the bracket, which is as ill-conditioned as P.
    Lm = np.eye(n) if L is None else np.asarray(L, dtype=float)
    if np.isinf(gamma):
        Lm = Lm[:0]
    m = H.shape[0]
    C = np.vstack([H, Lm])
    Re = np.zeros((C.shape[0], C.shape[0]))
    Re[:m, :m] = R
    Re[m:, m:] = -gamma * np.eye(Lm.shape[0])
    PCt = P @ C.T
    try:
        W = np.linalg.solve(Re + C @ PCt, PCt.T).T
    except np.linalg.LinAlgError as exc:
        raise GammaInfeasible(f"update singular at epoch {est.k}") from exc
    P_post = symmetrize(P - W @ PCt.T)
    K = W[:, :m]
    return Correction(_apply_correction(model, est, K, innovation, P_post), K, H, R, innovation)


def cost_j(
    errors: Sequence[NDArray],
    process_noise: Sequence[NDArray],
    measurement_noise: Sequence[NDArray],
    initial_error: NDArray,
    P0: NDArray,
    Q: Sequence[NDArray] | NDArray,
    R: Sequence[NDArray] | NDArray,
    L: NDArray | None = None,
) -> float:
    """
    Game-theoretic cost: weighted estimation error energy over the energy of the
    initial error and all disturbances.

    ``Q`` and ``R`` may be single matrices (time invariant) or per-epoch sequences.
    """
    if len(errors) == 0:
        raise ValueError("cost needs at least one epoch")
    num = 0.0
    for e in errors:
        e = np.atleast_1d(e)
        y = e if L is None else L @ e
        num += float(y @ y)
    e0 = np.atleast_1d(initial_error)
    den = float(e0 @ np.linalg.solve(np.atleast_2d(P0), e0))

    def _weighted(vals, mats):
        total = 0.0
        for i, v in enumerate(vals):
            v = np.atleast_1d(v)
            M = mats if isinstance(mats, np.ndarray) and np.ndim(mats) <= 2 else mats[i]
            total += float(v @ np.linalg.solve(np.atleast_2d(M), v))
        return total

    den += _weighted(process_noise, Q) + _weighted(measurement_noise, R)
    if not den > 0.0:
        raise ValueError("degenerate cost")
    return num / den


class RobustFilter:
    """
    Stateful driver around :func:`propagate` and the two update rules.

    Keeps the estimate, the H-infinity bound and the per-epoch event log, and
    exposes the matrices of the most recent step for error bounding.
    """

    def __init__(self, model: FilterModel, estimate: FilterEstimate, config: RobustConfig) -> None:
        self.model = model
        self.estimate = estimate
        self.config = config
        self.gamma: float | None = None if config.gamma == "auto" else float(config.gamma)
        self.events: list[tuple[int, str]] = []
        self.last_feasible = True

    def propagate(self, u: Any, dt: float) -> Prediction:
        pred = propagate(self.model, self.estimate, u, dt)
        self.estimate = pred.estimate
        return pred

    def _gamma_for(self, H: NDArray, R: NDArray) -> float:
        cfg = self.config
        P = self.estimate.P
        if cfg.gamma != "auto":
            if self.gamma is None:
                self.gamma = float(cfg.gamma)
        elif self.gamma is None or cfg.gamma_policy == "epoch":
            self.gamma = select_gamma(P, H, R, cfg.L, cfg.safety)
            return self.gamma
        self.last_feasible = check_feasibility(P, H, R, cfg.L, self.gamma)
        while not check_feasibility(P, H, R, cfg.L, self.gamma):
            self.gamma *= 2.0
            self.events.append((self.estimate.k, f"gamma doubled to {self.gamma:.6g}"))
            log.debug("epoch %d: gamma doubled to %g", self.estimate.k, self.gamma)
        return self.gamma

    def update(self, obs: Any, measured=None) -> Correction:
        if measured is None:
            measured = self.model.measurement(self.estimate.x, obs)
        H, R = measured[2], measured[3]
        if self.config.mode == "ekf" or H.shape[0] == 0:
            corr = update_ekf(self.model, self.estimate, obs, measured=measured)
        else:
            gamma = self._gamma_for(H, R)
            corr = update_ehf(self.model, self.estimate, obs, gamma, self.config.L, measured=measured)
        self.estimate = corr.estimate
        return corr
