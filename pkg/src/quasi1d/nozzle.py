"""Steady quasi-1D nozzle solutions from the isentropic area-Mach relation.

The subsonic regime inverts A/A* on the subsonic branch for a sonic area
fixed by the outlet pressure; the transonic regime places a normal shock in
the divergent section and locates it by matching the outlet pressure.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "NozzleExactSolution",
    "NozzleGeometry",
    "area_ratio",
    "exact_nozzle_solution",
    "mach_from_area_ratio",
    "normal_shock_downstream_mach",
    "normal_shock_stagnation_ratio",
]

_ROOT_TOL = 1e-14
_SUPERSONIC_MAX = 50.0


@dataclass(frozen=True)
class NozzleGeometry:
    """Convergent-divergent duct: width profile with a unique throat."""

    area: Callable
    x_min: float
    x_max: float
    x_throat: float

    @classmethod
    def parabolic(cls, coefficient=2.2, x_min=0.0, x_max=1.0):
        """Classic parabolic test profile a(x) = 1 + c (x - x_mid)^2."""
        mid = 0.5 * (x_min + x_max)
        return cls(area=lambda x: 1.0 + coefficient * (x - mid) ** 2,
                   x_min=x_min, x_max=x_max, x_throat=mid)

    @property
    def throat_area(self):
        return float(self.area(self.x_throat))


def area_ratio(mach, gamma=1.4):
    """A/A* as a function of Mach number (equals 1 exactly at Mach 1)."""
    mach = np.asarray(mach, dtype=float)
    k = (2.0 / (gamma + 1.0)) * (1.0 + 0.5 * (gamma - 1.0) * mach**2)
    return k ** ((gamma + 1.0) / (2.0 * (gamma - 1.0))) / mach


def mach_from_area_ratio(ratio, gamma=1.4, branch="subsonic"):
    """Invert the area-Mach relation on one branch by safeguarded bracketing."""
    scalar = np.isscalar(ratio)
    ratios = np.atleast_1d(np.asarray(ratio, dtype=float))
    if np.any(ratios < 1.0 - 1e-12):
        raise ValueError("area ratio below 1 has no solution")
    if branch == "subsonic":
        lo, hi = 1e-12, 1.0
    elif branch == "supersonic":
        lo, hi = 1.0, _SUPERSONIC_MAX
    else:
        raise ValueError(f"branch must be 'subsonic' or 'supersonic', got {branch!r}")

    out = np.empty_like(ratios)
    for n, r in enumerate(ratios):
        if r <= 1.0 + 1e-14:
            out[n] = 1.0
            continue
        out[n] = brentq(lambda m: area_ratio(m, gamma) - r, lo, hi,
                        xtol=_ROOT_TOL, rtol=8.9e-16)
    return float(out[0]) if scalar else out


def normal_shock_downstream_mach(mach, gamma=1.4):
    m2 = mach * mach
    return np.sqrt((1.0 + 0.5 * (gamma - 1.0) * m2)
                   / (gamma * m2 - 0.5 * (gamma - 1.0)))


def normal_shock_stagnation_ratio(mach, gamma=1.4):
    """Stagnation pressure ratio p02/p01 across a normal shock at ``mach``."""
    m2 = mach * mach
    t1 = (0.5 * (gamma + 1.0) * m2 / (1.0 + 0.5 * (gamma - 1.0) * m2)) \
        ** (gamma / (gamma - 1.0))
    t2 = (2.0 * gamma / (gamma + 1.0) * m2 - (gamma - 1.0) / (gamma + 1.0)) \
        ** (-1.0 / (gamma - 1.0))
    return t1 * t2


@dataclass(frozen=True)
class NozzleExactSolution:
    """Steady solution: callable x -> (rho, u, p), plus the Mach profile."""

    geometry: NozzleGeometry
    gamma: float
    stagnation_density: float
    stagnation_pressure: float
    sonic_area: float
    shock_position: Optional[float] = None
    post_shock_sonic_area: Optional[float] = None
    post_shock_stagnation_ratio: Optional[float] = None

    def mach(self, x):
        x = np.asarray(x, dtype=float)
        area = np.asarray(self.geometry.area(x), dtype=float)
        if self.shock_position is None:
            return mach_from_area_ratio(area / self.sonic_area, self.gamma,
                                        "subsonic")
        out = np.empty(np.broadcast(x, area).shape)
        flat_x, flat_a = np.ravel(x), np.ravel(area)
        flat = out.reshape(-1)
        for n, (xn, an) in enumerate(zip(flat_x, flat_a)):
            if xn < self.geometry.x_throat:
                flat[n] = mach_from_area_ratio(an / self.sonic_area, self.gamma,
                                               "subsonic")
            elif xn < self.shock_position:
                flat[n] = mach_from_area_ratio(an / self.sonic_area, self.gamma,
                                               "supersonic")
            else:
                flat[n] = mach_from_area_ratio(an / self.post_shock_sonic_area,
                                               self.gamma, "subsonic")
        return out[()] if out.ndim == 0 else out

    def primitives(self, x):
        """Density, velocity, and pressure at ``x``."""
        gamma = self.gamma
        x = np.asarray(x, dtype=float)
        mach = np.atleast_1d(self.mach(x))
        rho0 = np.full_like(mach, self.stagnation_density)
        p0 = np.full_like(mach, self.stagnation_pressure)
        if self.shock_position is not None:
            behind = np.atleast_1d(x) >= self.shock_position
            # Stagnation temperature is conserved across the shock, so the
            # post-shock stagnation density scales with the pressure.
            p0 = np.where(behind, p0 * self.post_shock_stagnation_ratio, p0)
            rho0 = np.where(behind, rho0 * self.post_shock_stagnation_ratio, rho0)
        total = 1.0 + 0.5 * (gamma - 1.0) * mach**2
        p = p0 * total ** (-gamma / (gamma - 1.0))
        rho = rho0 * total ** (-1.0 / (gamma - 1.0))
        u = mach * np.sqrt(gamma * p / rho)
        if x.ndim == 0:
            return float(rho[0]), float(u[0]), float(p[0])
        return rho, u, p

    def __call__(self, x):
        return self.primitives(x)


def exact_nozzle_solution(geometry, regime, stagnation_state=(1.0, 1.0),
                          outlet_pressure=None, gamma=1.4):
    """Steady nozzle solution for the given regime and outlet pressure.

    ``stagnation_state`` is the inflow stagnation (density, pressure);
    ``outlet_pressure`` is the absolute static pressure at the exit. The
    subsonic regime requires an outlet pressure high enough that the throat
    stays unchoked; the transonic regime requires one bracketed by the
    shock-at-throat and shock-at-exit limits.
    """
    rho0, p0 = stagnation_state
    if rho0 <= 0.0 or p0 <= 0.0:
        raise ValueError("stagnation state must be positive")
    if outlet_pressure is None:
        raise ValueError("an outlet pressure is required")
    area_exit = float(geometry.area(geometry.x_max))
    area_throat = geometry.throat_area

    def exit_mach_isentropic(p_exit, p_total):
        return np.sqrt((2.0 / (gamma - 1.0))
                       * ((p_total / p_exit) ** ((gamma - 1.0) / gamma) - 1.0))

    if regime == "subsonic":
        m_exit = exit_mach_isentropic(outlet_pressure, p0)
        sonic_area = area_exit / area_ratio(m_exit, gamma)
        if sonic_area >= area_throat * (1.0 - 1e-12):
            raise ValueError(
                "outlet pressure too low for subsonic flow: the throat chokes")
        return NozzleExactSolution(geometry=geometry, gamma=gamma,
                                   stagnation_density=rho0,
                                   stagnation_pressure=p0,
                                   sonic_area=sonic_area)

    if regime != "transonic":
        raise ValueError(f"regime must be 'subsonic' or 'transonic', got {regime!r}")

    sonic_area = area_throat

    def exit_pressure(x_shock):
        m_pre = mach_from_area_ratio(geometry.area(x_shock) / sonic_area,
                                     gamma, "supersonic")
        p0_ratio = normal_shock_stagnation_ratio(m_pre, gamma)
        sonic_post = sonic_area / p0_ratio
        m_exit = mach_from_area_ratio(area_exit / sonic_post, gamma, "subsonic")
        p_exit = p0 * p0_ratio * (1.0 + 0.5 * (gamma - 1.0) * m_exit**2) \
            ** (-gamma / (gamma - 1.0))
        return p_exit, p0_ratio, sonic_post

    span = geometry.x_max - geometry.x_throat
    lo = geometry.x_throat + 1e-10 * span
    hi = geometry.x_max
    p_lo, p_hi = exit_pressure(lo)[0], exit_pressure(hi)[0]
    if not min(p_lo, p_hi) <= outlet_pressure <= max(p_lo, p_hi):
        raise ValueError(
            f"outlet pressure {outlet_pressure} outside the transonic range "
            f"[{min(p_lo, p_hi):.6g}, {max(p_lo, p_hi):.6g}]")

    x_shock = brentq(lambda xs: exit_pressure(xs)[0] - outlet_pressure, lo, hi,
                     xtol=_ROOT_TOL * span, rtol=8.9e-16)
    p_exit, p0_ratio, sonic_post = exit_pressure(x_shock)
    if abs(p_exit - outlet_pressure) > 1e-10 * p0:
        raise RuntimeError("shock placement failed to match the outlet pressure")
    return NozzleExactSolution(geometry=geometry, gamma=gamma,
                               stagnation_density=rho0, stagnation_pressure=p0,
                               sonic_area=sonic_area, shock_position=x_shock,
                               post_shock_sonic_area=sonic_post,
                               post_shock_stagnation_ratio=p0_ratio)
