"""Geometry, initial data, manufactured solutions, and sources for the bundled
experiment suite.

Each case factory returns a :class:`Case`: closures for the width and
bathymetry, an initial-state builder taking the semidiscretization, optional
exact solution and source closures, and a boundary treatment. Coordinates are
taken as given by the semidiscretization (one-sided at element faces), so
piecewise definitions split cleanly across discontinuities.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import (DirichletBC, DischargeInflowBC, HeightOutflowBC,
                             PeriodicBC, SubsonicInflowBC, SubsonicOutflowBC)
from .equations import EulerEquations, ShallowWaterEquations
from .nozzle import NozzleGeometry, exact_nozzle_solution

__all__ = [
    "Case",
    "euler_ec_case",
    "euler_finegrid_case",
    "euler_manufactured_case",
    "euler_nozzle_case",
    "nonuniform_vertices",
    "swe_channel_case",
    "swe_finegrid_case",
    "swe_manufactured_case",
    "swe_wellbalanced_case",
]

TWO_PI = 2.0 * math.pi


@dataclass
class Case:
    """Self-contained problem definition for one experiment."""

    name: str
    equation: object
    domain: tuple
    width: Callable
    bathymetry: Optional[Callable] = None
    boundary: object = field(default_factory=PeriodicBC)
    initial: Callable = None                  # (semi) -> state array
    exact: Optional[Callable] = None          # (x, t) -> unscaled variables
    source: Optional[Callable] = None         # (x, t) -> rate of scaled variables
    extras: dict = field(default_factory=dict)


# --- quasi-1D shallow water ---------------------------------------------------------

def _swe_testbed_geometry():
    width = lambda x: np.exp(np.sin(TWO_PI * x))
    bed = lambda x: np.sin(np.pi * x) ** 2
    return width, bed


def swe_finegrid_case(gravity=9.81):
    """Smooth periodic channel flow without a closed-form solution."""
    width, bed = _swe_testbed_geometry()

    def initial(semi):
        x = semi.x
        ah = semi.aux[..., 0] * (3.0 + np.exp(np.cos(TWO_PI * x)))
        ahu = np.sin(np.cos(TWO_PI * x))
        return np.stack([ah, ahu], axis=-1)

    return Case(name="swe-finegrid", equation=ShallowWaterEquations(gravity),
                domain=(0.0, 1.0), width=width, bathymetry=bed,
                boundary=PeriodicBC(), initial=initial)


def swe_manufactured_case(gravity=9.81):
    """Periodic channel flow with a decaying manufactured solution.

    h = 3 + exp(cos 2 pi x) exp(-t) / 10 and u = sin(cos 2 pi x) exp(-t) over
    the same width/bed as the fine-grid case; the source terms follow from
    substituting into the balance law with hand-derived derivatives.
    """
    g = gravity
    width, bed = _swe_testbed_geometry()

    def fields(x, t):
        decay = math.exp(-t)
        c = np.cos(TWO_PI * x)
        s = np.sin(TWO_PI * x)
        h = 3.0 + 0.1 * np.exp(c) * decay
        h_x = -0.1 * TWO_PI * s * np.exp(c) * decay
        h_t = -(h - 3.0)
        u = np.sin(c) * decay
        u_x = -TWO_PI * s * np.cos(c) * decay
        u_t = -u
        return h, h_x, h_t, u, u_x, u_t

    def exact(x, t):
        h, _, _, u, _, _ = fields(x, t)
        return np.stack([h, h * u], axis=-1)

    def initial(semi):
        a = semi.aux[..., 0]
        h, _, _, u, _, _ = fields(semi.x, 0.0)
        return np.stack([a * h, a * h * u], axis=-1)

    def source(x, t):
        h, h_x, h_t, u, u_x, u_t = fields(x, t)
        a = width(x)
        a_x = TWO_PI * np.cos(TWO_PI * x) * a
        b_x = np.pi * np.sin(TWO_PI * x)
        s_mass = a * h_t + a_x * h * u + a * (h_x * u + h * u_x)
        s_mom = (a * (h_t * u + h * u_t) + a_x * h * u**2
                 + a * (h_x * u**2 + 2.0 * h * u * u_x)
                 + g * a * h * (h_x + b_x))
        return np.stack([s_mass, s_mom], axis=-1)

    return Case(name="swe-manufactured", equation=ShallowWaterEquations(gravity),
                domain=(0.0, 1.0), width=width, bathymetry=bed,
                boundary=PeriodicBC(), initial=initial, exact=exact, source=source)


def swe_wellbalanced_case(kind="continuous", gravity=9.81):
    """Lake at rest over contracting channel geometry, h + b = 1 and u = 0."""
    x_l, x_r, sigma = 0.25, 0.75, 0.2

    if kind == "continuous":
        def bed(x):
            bump = 0.25 * (1.0 + np.cos(10.0 * np.pi * (x - 0.5)))
            return np.where((x >= 0.4) & (x <= 0.6), bump, 0.0)

        def width(x):
            squeeze = 1.0 - sigma * (1.0 + np.cos(
                TWO_PI * (x - 0.5 * (x_l + x_r)) / (x_r - x_l)))
            return np.where((x >= x_l) & (x <= x_r), squeeze, 1.0)
    elif kind == "discontinuous":
        def bed(x):
            return np.where(x > 0.5, 0.5, 0.0)

        def width(x):
            squeeze = 1.0 - sigma * (1.0 + np.cos(
                TWO_PI * (x - 0.5 * (x_l - x_r)) / (x_r - x_l)))
            out = np.where((x >= x_l) & (x <= x_r), squeeze, 1.0)
            return np.where(x > x_r, 0.5, out)
    else:
        raise ValueError(f"kind must be 'continuous' or 'discontinuous', got {kind!r}")

    def initial(semi):
        a = semi.aux[..., 0]
        b = semi.aux[..., 1]
        ah = a * (1.0 - b)
        return np.stack([ah, np.zeros_like(ah)], axis=-1)

    def exact(x, t):
        del t
        h = 1.0 - bed(x)
        return np.stack([h, np.zeros_like(h)], axis=-1)

    return Case(name=f"swe-wellbalanced-{kind}",
                equation=ShallowWaterEquations(gravity), domain=(0.0, 1.0),
                width=width, bathymetry=bed, boundary=PeriodicBC(),
                initial=initial, exact=exact)


def swe_channel_case(gravity=9.81, inflow_discharge=20.0, outflow_height=1.85):
    """Steady transcritical flow through a converging-diverging channel."""

    def width(x):
        squeeze = 5.0 - 0.7065 * (1.0 + np.cos(TWO_PI * (x - 250.0) / 300.0))
        return np.where((x >= 100.0) & (x <= 450.0), squeeze, 5.0)

    def initial(semi):
        ah = semi.aux[..., 0] * 2.0
        ahu = np.full_like(ah, inflow_discharge)
        return np.stack([ah, ahu], axis=-1)

    boundary = (DischargeInflowBC(inflow_discharge), HeightOutflowBC(outflow_height))
    return Case(name="swe-channel", equation=ShallowWaterEquations(gravity),
                domain=(0.0, 500.0), width=width, bathymetry=None,
                boundary=boundary, initial=initial,
                extras={"inflow_discharge": inflow_discharge,
                        "outflow_height": outflow_height})


# --- quasi-1D compressible Euler ----------------------------------------------------

def euler_ec_case(gamma=1.4):
    """Discontinuous periodic data over a stepped nozzle width."""
    left = (3.4718, -2.5923, 5.7118)
    right = (2.0, -3.0, 2.639)

    def width(x):
        return np.where(x < 0.0, 1.0, 1.5)

    def initial(semi):
        eq = semi.equation
        mask = semi.x < 0.0
        rho = np.where(mask, left[0], right[0])
        vel = np.where(mask, left[1], right[1])
        p = np.where(mask, left[2], right[2])
        return eq.conservative(rho, vel, p, semi.aux)

    return Case(name="euler-ec", equation=EulerEquations(gamma),
                domain=(-1.0, 1.0), width=width, boundary=PeriodicBC(),
                initial=initial)


def _euler_finegrid_width(x):
    return 1.0 - 0.2 * (1.0 + np.cos(TWO_PI * (x - 0.5)))


def euler_finegrid_case(gamma=1.4):
    """Smooth perturbation of a constant state, boundary values held at the
    initial trace."""

    def primitives(x):
        rho = 1.0 - 0.1 * (1.0 + np.sin(TWO_PI * (x - 0.1)))
        return rho, np.zeros_like(rho), rho**gamma

    equation = EulerEquations(gamma)

    def initial(semi):
        rho, vel, p = primitives(semi.x)
        return equation.conservative(rho, vel, p, semi.aux)

    def frozen_state(x, t):
        del t
        rho, vel, p = primitives(np.asarray(x))
        a = _euler_finegrid_width(np.asarray(x))
        aux = np.stack([a], axis=-1)
        return equation.conservative(rho, vel, p, aux)

    boundary = (DirichletBC(frozen_state), DirichletBC(frozen_state))
    return Case(name="euler-finegrid", equation=equation, domain=(-1.0, 1.0),
                width=_euler_finegrid_width, boundary=boundary, initial=initial)


def nonuniform_vertices(num_elements, x_min=-1.0, x_max=1.0, amplitude=0.3):
    """Vertices of a smoothly stretched grid, x - amplitude sin(pi x)."""
    x = np.linspace(x_min, x_max, num_elements + 1)
    return x - amplitude * np.sin(np.pi * x)


def euler_manufactured_case(gamma=1.4):
    """Periodic manufactured solution with rho = u = p = w(x) exp(-t)."""

    def width(x):
        return 1.0 - 0.1 * (1.0 + np.cos(TWO_PI * (x - 0.5)))

    def w_and_dx(x, t):
        decay = math.exp(-t)
        w = (1.0 + 0.1 * np.sin(TWO_PI * x) + 0.1 * np.cos(TWO_PI * x)) * decay
        w_x = 0.1 * TWO_PI * (np.cos(TWO_PI * x) - np.sin(TWO_PI * x)) * decay
        return w, w_x

    def exact(x, t):
        w, _ = w_and_dx(x, t)
        energy = 0.5 * w * w * w + w / (gamma - 1.0)
        return np.stack([w, w * w, energy], axis=-1)

    equation = EulerEquations(gamma)

    def initial(semi):
        w, _ = w_and_dx(semi.x, 0.0)
        return equation.conservative(w, w, w, semi.aux)

    def source(x, t):
        w, w_x = w_and_dx(x, t)
        w_t = -w
        a = width(x)
        a_x = 0.1 * TWO_PI * np.sin(TWO_PI * (x - 0.5))
        gm = gamma / (gamma - 1.0)
        s_mass = a * w_t + a_x * w * w + 2.0 * a * w * w_x
        s_mom = (2.0 * a * w * w_t + a_x * w**3 + 3.0 * a * w * w * w_x
                 + a * w_x)
        energy_t = 1.5 * w * w * w_t + w_t / (gamma - 1.0)
        s_energy = (a * energy_t
                    + a_x * (0.5 * w**4 + gm * w * w)
                    + a * (2.0 * w**3 * w_x + 2.0 * gm * w * w_x))
        return np.stack([s_mass, s_mom, s_energy], axis=-1)

    return Case(name="euler-manufactured", equation=equation, domain=(0.0, 1.0),
                width=width, boundary=PeriodicBC(), initial=initial,
                exact=exact, source=source)


def euler_nozzle_case(regime="subsonic", gamma=1.4, geometry=None,
                      stagnation_state=(1.0, 1.0), pressure_ratio=None):
    """Laval nozzle flow driven by inflow density/pressure and outflow pressure.

    The default unit-length parabolic duct keeps a 1.55:1 exit-to-throat area
    ratio, for which the defaults 0.89 (subsonic) and 0.75 (transonic) produce
    the intended regimes; the initial state is the constant inflow state of
    the exact solution.
    """
    if geometry is None:
        geometry = NozzleGeometry.parabolic()
    if pressure_ratio is None:
        pressure_ratio = 0.89 if regime == "subsonic" else 0.75
    rho0, p0 = stagnation_state
    outlet_pressure = pressure_ratio * p0
    solution = exact_nozzle_solution(geometry, regime, stagnation_state,
                                     outlet_pressure, gamma)
    rho_in, vel_in, p_in = solution.primitives(geometry.x_min)

    equation = EulerEquations(gamma)

    def initial(semi):
        x = semi.x
        return equation.conservative(np.full_like(x, rho_in),
                                     np.full_like(x, vel_in),
                                     np.full_like(x, p_in), semi.aux)

    def exact(x, t):
        del t
        rho, vel, p = solution.primitives(x)
        energy = p / (gamma - 1.0) + 0.5 * rho * vel**2
        return np.stack([rho, rho * vel, energy], axis=-1)

    boundary = (SubsonicInflowBC(rho_in, p_in), SubsonicOutflowBC(outlet_pressure))
    return Case(name=f"euler-nozzle-{regime}", equation=equation,
                domain=(geometry.x_min, geometry.x_max), width=geometry.area,
                boundary=boundary, initial=initial, exact=exact,
                extras={"solution": solution, "geometry": geometry,
                        "pressure_ratio": pressure_ratio, "regime": regime})
