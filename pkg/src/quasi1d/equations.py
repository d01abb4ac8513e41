"""Quasi-1D shallow water and compressible Euler systems.

Both systems evolve width-scaled conservative variables: ``(ah, ahu)`` for
shallow water in a channel of width a(x) over bathymetry b(x), and
``(a rho, a rho u, a E)`` for gas flow through a nozzle of width a(x).
Because the varying width makes the systems non-conservative, the two-point
entropy conservative fluxes carry a non-symmetric term, and entropy
conservation holds in the generalized sense

    v_L . f(u_L, u_R) - v_R . f(u_R, u_L) = psi(u_L) - psi(u_R),

which every flux here satisfies discretely to roundoff.

State arrays carry the conservative variables in the trailing axis and
broadcast over any leading shape; auxiliary arrays hold the nodal geometry
(``(a, b)`` for shallow water, ``(a,)`` for Euler) in the same layout.
"""

from dataclasses import dataclass

import numpy as np

from .means import logmean, prodmean

__all__ = [
    "EntropyPair",
    "EulerEquations",
    "ShallowWaterEquations",
]


@dataclass(frozen=True)
class EntropyPair:
    """Entropy S, entropy flux F, flux potential psi, and entropy variables."""

    entropy: np.ndarray
    entropy_flux: np.ndarray
    potential: np.ndarray
    variables: np.ndarray


class QuasiOneDSystem:
    """Shared interface flux machinery for the two quasi-1D systems."""

    nvars = None
    naux = None

    def interface_flux(self, u, aux, u_plus, aux_plus, normal, mode="es-lxf",
                       lam=None):
        """Numerical flux at a face, seen from the element owning ``u``.

        ``normal`` is the outward normal (+1 right face, -1 left face) and
        ``mode`` selects the family: the bare entropy conservative flux
        (``"ec"``), a local Lax-Friedrichs penalization (``"es-lxf"``), or the
        entropy-variable penalization that stays well balanced across
        discontinuous geometry (``"es-wb"``, shallow water only).
        """
        f = self.flux_ec(u, aux, u_plus, aux_plus)
        if mode == "ec":
            return f
        if lam is None:
            lam = self.max_wavespeed(u, aux, u_plus, aux_plus)
        lam = np.asarray(lam)[..., None]
        if mode == "es-lxf":
            return f - 0.5 * lam * (u_plus - u) * normal
        if mode == "es-wb":
            return f - self._wb_penalty(u, aux, u_plus, aux_plus, lam) * normal
        raise ValueError(f"unknown interface flux mode {mode!r}")

    def _wb_penalty(self, u, aux, u_plus, aux_plus, lam):
        raise ValueError(f"well-balanced flux is not defined for {type(self).__name__}")

    def mirror_state(self, u):
        """Reflective-wall exterior state: momentum negated, rest unchanged."""
        out = np.array(u, dtype=float, copy=True)
        out[..., 1] = -out[..., 1]
        return out

    def entropy_pair(self, u, aux):
        return EntropyPair(
            entropy=self.entropy(u, aux),
            entropy_flux=self.entropy_flux(u, aux),
            potential=self.entropy_potential(u, aux),
            variables=self.entropy_vars(u, aux),
        )


class ShallowWaterEquations(QuasiOneDSystem):
    """Shallow water flow in a symmetric channel with varying width and bed.

    Conservative variables ``u = (ah, ahu)``; auxiliary fields ``aux = (a, b)``
    with channel width a > 0 and bathymetry elevation b. Positivity of the
    water column is assumed, not enforced.
    """

    nvars = 2
    naux = 2

    def __init__(self, gravity=9.81):
        if gravity <= 0:
            raise ValueError("gravity must be positive")
        self.gravity = gravity

    def primitives(self, u, aux):
        """Water height h and velocity from the scaled conservative state."""
        ah = u[..., 0]
        if np.any(ah <= 0.0):
            raise ValueError("non-positive water column ah")
        return ah / aux[..., 0], u[..., 1] / ah

    def conservative(self, height, velocity, aux):
        a = aux[..., 0]
        ah = a * np.asarray(height, dtype=float)
        return np.stack(np.broadcast_arrays(ah, ah * velocity), axis=-1)

    def entropy(self, u, aux):
        g = self.gravity
        h, vel = self.primitives(u, aux)
        ah = u[..., 0]
        return 0.5 * u[..., 1] * vel + 0.5 * g * ah * h + g * ah * aux[..., 1]

    def entropy_flux(self, u, aux):
        g = self.gravity
        h, vel = self.primitives(u, aux)
        return vel * (0.5 * u[..., 1] * vel + g * u[..., 0] * (h + aux[..., 1]))

    def entropy_potential(self, u, aux):
        g = self.gravity
        h, vel = self.primitives(u, aux)
        return 0.5 * g * u[..., 0] * (h + aux[..., 1]) * vel

    def entropy_vars(self, u, aux):
        g = self.gravity
        h, vel = self.primitives(u, aux)
        v1 = g * (h + aux[..., 1]) - 0.5 * vel * vel
        return np.stack(np.broadcast_arrays(v1, vel), axis=-1)

    def flux_ec(self, u_l, aux_l, u_r, aux_r):
        """Entropy conservative two-point flux with non-symmetric bed term.

        Mass component {ahu}; momentum {ahu}{u} + (g/2) a_L h_L (h_R + b_R).
        The second argument pair plays the role of the neighbor state.
        """
        g = self.gravity
        h_l, vel_l = self.primitives(u_l, aux_l)
        h_r, vel_r = self.primitives(u_r, aux_r)
        ahu_avg = 0.5 * (u_l[..., 1] + u_r[..., 1])
        f_mass = ahu_avg
        f_mom = (ahu_avg * 0.5 * (vel_l + vel_r)
                 + 0.5 * g * aux_l[..., 0] * h_l * (h_r + aux_r[..., 1]))
        return np.stack(np.broadcast_arrays(f_mass, f_mom), axis=-1)

    def flux_nonsym(self, u_l, aux_l, u_r, aux_r):
        """Non-symmetric part of the flux (the bed/width coupling term)."""
        g = self.gravity
        h_l = u_l[..., 0] / aux_l[..., 0]
        h_r = u_r[..., 0] / aux_r[..., 0]
        f_mom = 0.5 * g * aux_l[..., 0] * h_l * (h_r + aux_r[..., 1])
        return np.stack(np.broadcast_arrays(np.zeros_like(f_mom), f_mom), axis=-1)

    def max_wavespeed(self, u_l, aux_l, u_r, aux_r):
        g = self.gravity
        h_l, vel_l = self.primitives(u_l, aux_l)
        h_r, vel_r = self.primitives(u_r, aux_r)
        return np.maximum(np.abs(vel_l) + np.sqrt(g * h_l),
                          np.abs(vel_r) + np.sqrt(g * h_r))

    def wavespeed(self, u, aux):
        h, vel = self.primitives(u, aux)
        return np.abs(vel) + np.sqrt(self.gravity * h)

    def entropy_jacobian(self, u_l, aux_l, u_r, aux_r):
        """Symmetric positive definite scaling matrix for the wb penalty.

        The 2x2 matrix (1/ah) [[g h + u^2, -u], [-u, 1]] evaluated at the
        arithmetic mean of the conservative state and width.
        """
        a = 0.5 * (aux_l[..., 0] + aux_r[..., 0])
        ah = 0.5 * (u_l[..., 0] + u_r[..., 0])
        h = ah / a
        vel = 0.5 * (u_l[..., 1] + u_r[..., 1]) / ah
        r = np.empty(np.broadcast(a, vel).shape + (2, 2))
        r[..., 0, 0] = (self.gravity * h + vel * vel) / ah
        r[..., 0, 1] = -vel / ah
        r[..., 1, 0] = r[..., 0, 1]
        r[..., 1, 1] = 1.0 / ah
        return r

    def _wb_penalty(self, u, aux, u_plus, aux_plus, lam):
        jump_v = self.entropy_vars(u_plus, aux_plus) - self.entropy_vars(u, aux)
        r = self.entropy_jacobian(u, aux, u_plus, aux_plus)
        return 0.5 * lam * np.einsum("...ij,...j->...i", r, jump_v)

    def admissibility_violations(self, u, aux):
        return ~np.isfinite(u).all(axis=-1) | (u[..., 0] <= 0.0)


class EulerEquations(QuasiOneDSystem):
    """Compressible gas flow through a nozzle of varying width a(x).

    Conservative variables ``u = (a rho, a rho u, a E)`` with total energy
    ``E = rho u^2 / 2 + p / (gamma - 1)``; auxiliary field ``aux = (a,)``.
    Positive density and pressure are assumed, not enforced.
    """

    nvars = 3
    naux = 1

    def __init__(self, gamma=1.4):
        if gamma <= 1:
            raise ValueError("specific heat ratio must exceed 1")
        self.gamma = gamma

    def primitives(self, u, aux):
        """Density, velocity, and pressure from the scaled state."""
        a = aux[..., 0]
        rho = u[..., 0] / a
        if np.any(u[..., 0] <= 0.0):
            raise ValueError("non-positive density")
        vel = u[..., 1] / u[..., 0]
        p = (self.gamma - 1.0) * (u[..., 2] - 0.5 * u[..., 1] * vel) / a
        if np.any(p <= 0.0):
            raise ValueError("non-positive pressure")
        return rho, vel, p

    def conservative(self, rho, velocity, pressure, aux):
        a = aux[..., 0]
        rho = np.asarray(rho, dtype=float)
        energy = pressure / (self.gamma - 1.0) + 0.5 * rho * velocity**2
        return np.stack(np.broadcast_arrays(a * rho, a * rho * velocity,
                                            a * energy), axis=-1)

    def _physical_entropy(self, rho, p):
        return np.log(p) - self.gamma * np.log(rho)

    def entropy(self, u, aux):
        rho, _, p = self.primitives(u, aux)
        return -u[..., 0] * self._physical_entropy(rho, p) / (self.gamma - 1.0)

    def entropy_flux(self, u, aux):
        rho, vel, p = self.primitives(u, aux)
        return -u[..., 1] * self._physical_entropy(rho, p) / (self.gamma - 1.0)

    def entropy_potential(self, u, aux):
        return np.asarray(u[..., 1], dtype=float)

    def entropy_vars(self, u, aux):
        gamma = self.gamma
        rho, vel, p = self.primitives(u, aux)
        s = self._physical_entropy(rho, p)
        v1 = (gamma - s) / (gamma - 1.0) - 0.5 * rho * vel * vel / p
        v2 = rho * vel / p
        v3 = -rho / p
        return np.stack(np.broadcast_arrays(v1, v2, v3), axis=-1)

    def flux_ec(self, u_l, aux_l, u_r, aux_r):
        """Entropy conservative two-point flux with non-symmetric a_L {p} term.

        Width-aware generalization of the logarithmic-mean gas flux: the mass
        and energy components stay symmetric, the momentum component carries
        the one-sided pressure coupling a_L {p}.
        """
        gamma = self.gamma
        rho_l, vel_l, p_l = self.primitives(u_l, aux_l)
        rho_r, vel_r, p_r = self.primitives(u_r, aux_r)
        a_l = aux_l[..., 0]
        a_r = aux_r[..., 0]

        rho_log = logmean(rho_l, rho_r)
        beta_log = logmean(rho_l / p_l, rho_r / p_r)
        au_avg = 0.5 * (a_l * vel_l + a_r * vel_r)
        p_avg = 0.5 * (p_l + p_r)

        f_mass = rho_log * au_avg
        f_mom = f_mass * 0.5 * (vel_l + vel_r) + a_l * p_avg
        f_energy = (0.5 * f_mass * vel_l * vel_r
                    + f_mass / ((gamma - 1.0) * beta_log)
                    + prodmean(p_l, p_r, a_l * vel_l, a_r * vel_r))
        return np.stack(np.broadcast_arrays(f_mass, f_mom, f_energy), axis=-1)

    def flux_nonsym(self, u_l, aux_l, u_r, aux_r):
        """Non-symmetric part of the flux (the pressure/width coupling)."""
        _, _, p_l = self.primitives(u_l, aux_l)
        _, _, p_r = self.primitives(u_r, aux_r)
        f_mom = aux_l[..., 0] * 0.5 * (p_l + p_r)
        zero = np.zeros_like(f_mom)
        return np.stack(np.broadcast_arrays(zero, f_mom, zero), axis=-1)

    def max_wavespeed(self, u_l, aux_l, u_r, aux_r):
        gamma = self.gamma
        rho_l, vel_l, p_l = self.primitives(u_l, aux_l)
        rho_r, vel_r, p_r = self.primitives(u_r, aux_r)
        return np.maximum(np.abs(vel_l) + np.sqrt(gamma * p_l / rho_l),
                          np.abs(vel_r) + np.sqrt(gamma * p_r / rho_r))

    def wavespeed(self, u, aux):
        rho, vel, p = self.primitives(u, aux)
        return np.abs(vel) + np.sqrt(self.gamma * p / rho)

    def admissibility_violations(self, u, aux):
        bad = ~np.isfinite(u).all(axis=-1) | (u[..., 0] <= 0.0)
        # Pressure positivity, checked without raising on the bad entries.
        internal = u[..., 2] - 0.5 * u[..., 1] ** 2 / np.where(u[..., 0] > 0,
                                                               u[..., 0], 1.0)
        return bad | (internal <= 0.0)
