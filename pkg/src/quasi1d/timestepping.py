"""Explicit Runge-Kutta integration with fixed and adaptive stepping.

Two methods are provided: the classical fixed-step 4-stage scheme
(``rk4-classic``) and the Dormand-Prince 5(4) embedded pair with PI step-size
control (``rk45-embedded``). Exactly one of a fixed step or the error
tolerances drives the stepping; an optional CFL number additionally caps
adaptive steps at the convective stability estimate.
"""

import time as _time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import DiagnosticsSample, InadmissibleStateError

__all__ = [
    "IntegrationResult",
    "IntegratorConfig",
    "StepUnderflowError",
    "estimate_dt",
    "integrate",
]

# Dormand-Prince 5(4) tableau; the last stage row doubles as the 5th order
# weights (FSAL), _B4 are the embedded 4th order weights.
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
       187 / 2100, 1 / 40)
_ERR = tuple(b5 - b4 for b5, b4 in zip(_A[6] + (0.0,), _B4))

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_PI_BETA1 = 0.7 / 5.0
_PI_BETA2 = 0.4 / 5.0


class StepUnderflowError(RuntimeError):
    """Raised when the adaptive controller drives dt below resolution."""


@dataclass
class IntegratorConfig:
    """Stepping policy for :func:`integrate`.

    Exactly one of ``dt`` (fixed step) or the tolerance pair drives the
    stepping; ``cfl`` additionally caps adaptive steps (and supplies the fixed
    step for ``rk4-classic`` when ``dt`` is omitted). ``sample_every`` is the
    diagnostics cadence in accepted steps (``None`` disables sampling).
    """

    t_final: float
    method: str = "rk45-embedded"
    dt: Optional[float] = None
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    cfl: Optional[float] = None
    sample_every: Optional[int] = 1
    steady_rhs_tol: Optional[float] = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        if self.method not in ("rk4-classic", "rk45-embedded"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "rk45-embedded" and self.dt is not None:
            raise ValueError("rk45-embedded is driven by tolerances, not a fixed dt")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass
class IntegrationResult:
    state: np.ndarray
    time: float
    samples: list
    steps_accepted: int = 0
    steps_rejected: int = 0
    max_error_estimate: float = 0.0
    wall_seconds: float = 0.0
    stopped_steady: bool = False


def estimate_dt(semi, u, cfl):
    """CFL step bound cfl * min_k h_k / (N^2 lambda_k) over the elements.

    ``lambda_k`` is the largest nodal wavespeed in element k; elements at rest
    fall back to unit speed so the bound stays finite.
    """
    lam = semi.equation.wavespeed(u, semi.aux).max(axis=1)
    lam = np.where(lam > 0.0, lam, 1.0)
    degree_sq = max(semi.op.degree, 1) ** 2
    return cfl * float(np.min(semi.element_sizes / (degree_sq * lam)))


def _rk4_step(f, u, t, dt):
    k1 = f(u, t)
    k2 = f(u + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(u + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(u + dt * k3, t + dt)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp45_step(f, u, t, dt, k1):
    """One Dormand-Prince step; returns (u_new, error, k_last) with FSAL k."""
    k = [k1]
    for row, c in zip(_A[1:], _C[1:]):
        stage = u + dt * sum(a * ki for a, ki in zip(row, k))
        k.append(f(stage, t + c * dt))
    u_new = stage  # the 7th stage argument equals the 5th order solution
    err = dt * sum(e * ki for e, ki in zip(_ERR, k) if e != 0.0)
    return u_new, err, k[-1]


def _scaled_error(err, u_old, u_new, abs_tol, rel_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(u_old), np.abs(u_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


class _Observer:
    """Collects diagnostics samples at the configured cadence."""

    def __init__(self, semi, config, callback):
        self.semi = semi
        self.config = config
        self.callback = callback
        self.samples = []
        self.enabled = (config.sample_every is not None
                        and hasattr(semi, "entropy_residual"))
        self.watch_steady = (config.steady_rhs_tol is not None
                             and hasattr(semi, "rhs_norm"))

    def due(self, step):
        cadence = self.config.sample_every
        return self.enabled and cadence is not None and step % cadence == 0

    def record(self, u, t, dudt=None):
        """Sample diagnostics; returns True when a steady state is detected."""
        if not (self.enabled or self.watch_steady):
            return False
        if dudt is None:
            dudt = self.semi.rhs(u, t)
        if self.enabled:
            sample = DiagnosticsSample(
                time=t,
                entropy_residual=self.semi.entropy_residual(u, dudt),
                totals=self.semi.conserved_totals(u),
                total_entropy=self.semi.total_entropy(u),
            )
            self.samples.append(sample)
            if self.callback is not None:
                self.callback(sample)
        if self.watch_steady:
            return self.semi.rhs_norm(dudt) < self.config.steady_rhs_tol
        return False


def integrate(semi, u0, config, observer=None):
    """Advance ``semi.rhs`` from ``u0`` to ``config.t_final``.

    ``semi`` needs only an ``rhs(u, t)`` method; when it also provides the
    diagnostics interface of a semidiscretization, entropy residual and
    conserved totals are sampled from a fresh rhs evaluation at the configured
    cadence (and passed to ``observer``). The final step is clipped so the
    integration ends exactly at ``t_final``.
    """
    started = _time.perf_counter()
    u = np.array(u0, dtype=float, copy=True)
    t = 0.0
    check = getattr(semi, "check_state", None)
    if check is not None:
        check(u, t)

    watcher = _Observer(semi, config, observer)
    result = IntegrationResult(state=u, time=t, samples=watcher.samples)
    if watcher.record(u, t):
        result.stopped_steady = True
        result.wall_seconds = _time.perf_counter() - started
        return result

    if config.method == "rk4-classic":
        _run_fixed(semi, config, watcher, result, check)
    else:
        _run_adaptive(semi, config, watcher, result, check)

    result.wall_seconds = _time.perf_counter() - started
    return result


def _clip(dt, t, t_final):
    return min(dt, t_final - t)


def _run_fixed(semi, config, watcher, result, check):
    dt = config.dt
    if dt is None:
        if config.cfl is None:
            raise ValueError("rk4-classic needs a fixed dt or a cfl number")
        dt = estimate_dt(semi, result.state, config.cfl)
    t_final = config.t_final
    u, t = result.state, result.time
    eps = 1e-14 * max(1.0, t_final)

    while t < t_final - eps:
        h = _clip(dt, t, t_final)
        u = _rk4_step(semi.rhs, u, t, h)
        t += h
        result.steps_accepted += 1
        if check is not None:
            check(u, t)
        if watcher.due(result.steps_accepted) and watcher.record(u, t):
            result.stopped_steady = True
            break
        if result.steps_accepted >= config.max_steps:
            raise RuntimeError("step budget exhausted")
    result.state, result.time = u, t


def _run_adaptive(semi, config, watcher, result, check):
    t_final = config.t_final
    u, t = result.state, result.time
    eps = 1e-14 * max(1.0, t_final)

    k1 = semi.rhs(u, t)
    if config.cfl is not None and hasattr(semi, "equation"):
        dt = estimate_dt(semi, u, config.cfl)
    else:
        dt = t_final / 100.0
    est_prev = 1.0

    while t < t_final - eps:
        if dt < 1e-14 * t_final:
            raise StepUnderflowError(f"step size underflow at t={t}")
        h = _clip(dt, t, t_final)
        u_new, err, k_last = _dp45_step(semi.rhs, u, t, h, k1)
        est = _scaled_error(err, u, u_new, config.abs_tol, config.rel_tol)

        if np.isfinite(est) and est <= 1.0:
            t += h
            u, k1 = u_new, k_last
            result.steps_accepted += 1
            result.max_error_estimate = max(result.max_error_estimate, est)
            factor = _SAFETY * max(est, 1e-10) ** -_PI_BETA1 * est_prev ** _PI_BETA2
            dt = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            est_prev = max(est, 1e-10)
            if check is not None:
                check(u, t)
            if watcher.due(result.steps_accepted) and watcher.record(u, t, dudt=k1):
                result.stopped_steady = True
                break
        else:
            result.steps_rejected += 1
            shrink = 0.5 if not np.isfinite(est) else \
                max(_MIN_FACTOR, _SAFETY * est ** (-1.0 / 5.0))
            dt = h * shrink
            est_prev = 1.0
            continue

        if config.cfl is not None and hasattr(semi, "equation"):
            dt = min(dt, estimate_dt(semi, u, config.cfl))
        if result.steps_accepted + result.steps_rejected >= config.max_steps:
            raise RuntimeError("step budget exhausted")

    result.state, result.time = u, t
