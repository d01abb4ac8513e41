"""Mesh handling, the flux-differencing right-hand side, and diagnostics.

The semi-discretization follows the one-dimensional flux-differencing form

    M_k du/dt + ((Q - Q.T) o F) 1 + B f*(u, u+) = 0,   F_ij = f_ec(u_i, u_j),

per element, with the entropy conservative two-point flux filling the full
(non-symmetric) flux matrix F, exterior states u+ supplying both neighbor
coupling and boundary conditions, and the physical mass matrix
``M_k = (h_k / 2) M`` on elements mapped from the length-2 reference interval.
"""

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .sbp import SBPOperator, build_sbp_operators

__all__ = [
    "DiagnosticsSample",
    "DirichletBC",
    "DischargeInflowBC",
    "HeightOutflowBC",
    "InadmissibleStateError",
    "Mesh1D",
    "PeriodicBC",
    "Semidiscretization",
    "SubsonicInflowBC",
    "SubsonicOutflowBC",
    "WallBC",
    "interpolate_nodal",
]


class InadmissibleStateError(RuntimeError):
    """Raised when a state loses positivity (or finiteness) somewhere."""

    def __init__(self, time, element, node, message):
        self.time = time
        self.element = element
        self.node = node
        super().__init__(
            f"inadmissible state at t={time!r}, element {element}, node {node}: {message}")


# --- boundary condition descriptors -------------------------------------------------

@dataclass(frozen=True)
class PeriodicBC:
    """Exterior state at one end is the interior state at the other."""


@dataclass(frozen=True)
class WallBC:
    """Reflective wall: mirror state with negated momentum."""


@dataclass(frozen=True)
class DirichletBC:
    """Exterior state supplied by a callable (x, t) -> scaled conservative state."""

    state: Callable


@dataclass(frozen=True)
class SubsonicInflowBC:
    """Euler inflow: prescribed density and pressure, interior velocity."""

    rho: float
    pressure: float


@dataclass(frozen=True)
class SubsonicOutflowBC:
    """Euler outflow: prescribed pressure, interior density and velocity."""

    pressure: float


@dataclass(frozen=True)
class DischargeInflowBC:
    """Shallow water inflow: prescribed discharge ahu, interior height."""

    discharge: float


@dataclass(frozen=True)
class HeightOutflowBC:
    """Shallow water outflow: prescribed height h, interior velocity."""

    height: float


@dataclass(frozen=True)
class Mesh1D:
    """Partition of an interval into elements, plus its boundary treatment.

    ``boundary`` is either a single :class:`PeriodicBC` or a (left, right)
    pair of per-end conditions.
    """

    vertices: np.ndarray
    boundary: object = field(default_factory=PeriodicBC)

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        if vertices.ndim != 1 or vertices.size < 2:
            raise ValueError("need at least two vertices")
        if np.any(np.diff(vertices) <= 0.0):
            raise ValueError("vertices must be strictly increasing")
        vertices.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)
        if not isinstance(self.boundary, PeriodicBC):
            left, right = self.boundary
            object.__setattr__(self, "boundary", (left, right))

    @classmethod
    def uniform(cls, num_elements, x_min, x_max, boundary=None):
        if boundary is None:
            boundary = PeriodicBC()
        return cls(np.linspace(x_min, x_max, num_elements + 1), boundary)

    @property
    def num_elements(self):
        return self.vertices.size - 1

    @property
    def element_sizes(self):
        return np.diff(self.vertices)

    @property
    def periodic(self):
        return isinstance(self.boundary, PeriodicBC)


def _sample_field(fn, x):
    """Evaluate a scalar field closure at nodal coordinates, vectorized or not."""
    out = np.asarray(fn(x), dtype=float)
    if out.shape != x.shape:
        out = np.vectorize(fn, otypes=[float])(x)
    return out


class Semidiscretization:
    """Spatial operator for one quasi-1D system on a fixed mesh.

    Nodal geometry fields are collocated once at construction. Endpoint
    coordinates are nudged one ulp toward the element interior before
    sampling so that width/bathymetry closures with jumps at element
    vertices yield the correct one-sided values on each side of a face.
    """

    def __init__(self, mesh, operator, equation, width=1.0, bathymetry=None,
                 interface_flux="es-lxf", source=None):
        if isinstance(operator, (int, np.integer)):
            operator = build_sbp_operators(operator)
        if interface_flux not in ("ec", "es-lxf", "es-wb"):
            raise ValueError(f"unknown interface flux {interface_flux!r}")
        self.mesh = mesh
        self.op: SBPOperator = operator
        self.equation = equation
        self.interface_flux = interface_flux
        self.source = source

        num_k = mesh.num_elements
        sizes = mesh.element_sizes
        ref = 0.5 * (operator.nodes + 1.0)                      # map to [0, 1]
        x = mesh.vertices[:-1, None] + sizes[:, None] * ref[None, :]
        x[:, 0] = np.nextafter(x[:, 0], np.inf)
        x[:, -1] = np.nextafter(x[:, -1], -np.inf)
        self.x = x
        self.element_sizes = sizes
        # Physical mass matrix diagonal; the reference element has length 2.
        self.mass = 0.5 * sizes[:, None] * operator.M[None, :]
        self._skew_q = operator.Q - operator.Q.T

        naux = equation.naux
        aux = np.empty((num_k, operator.n_nodes, naux))
        if callable(width):
            aux[..., 0] = _sample_field(width, x)
        else:
            aux[..., 0] = float(width)
        if naux > 1:
            if bathymetry is None:
                aux[..., 1] = 0.0
            elif callable(bathymetry):
                aux[..., 1] = _sample_field(bathymetry, x)
            else:
                aux[..., 1] = float(bathymetry)
        if np.any(aux[..., 0] <= 0.0):
            raise ValueError("channel width must be positive everywhere")
        aux.flags.writeable = False
        self.aux = aux

    @property
    def num_elements(self):
        return self.mesh.num_elements

    @property
    def shape(self):
        return (self.mesh.num_elements, self.op.n_nodes, self.equation.nvars)

    # --- state helpers ---------------------------------------------------------

    def sample(self, fn, t=None):
        """Collocate a state function (x[, t]) -> trailing-axis state vector."""
        values = fn(self.x) if t is None else fn(self.x, t)
        return np.ascontiguousarray(np.broadcast_to(values, self.shape), dtype=float)

    def first_violation(self, u):
        bad = self.equation.admissibility_violations(u, self.aux)
        if not bad.any():
            return None
        k, i = np.argwhere(bad)[0]
        return int(k), int(i)

    def check_state(self, u, t=None):
        hit = self.first_violation(u)
        if hit is not None:
            k, i = hit
            raise InadmissibleStateError(t, k, i, f"state {u[k, i]} at x={self.x[k, i]}")

    # --- boundary handling -----------------------------------------------------

    def apply_boundary(self, side, interior_state, t):
        """Exterior state u+ at a domain end given the interior endpoint state."""
        u_plus, _ = self._exterior(side, np.asarray(interior_state, dtype=float), t)
        return u_plus

    def _end_aux(self, side):
        return self.aux[0, 0] if side == "left" else self.aux[-1, -1]

    def _end_x(self, side):
        return self.x[0, 0] if side == "left" else self.x[-1, -1]

    def _exterior(self, side, u_int, t):
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        eq = self.equation
        aux_int = self._end_aux(side)
        if self.mesh.periodic:
            raise ValueError("periodic boundaries have no exterior state provider")
        bc = self.mesh.boundary[0 if side == "left" else 1]

        if isinstance(bc, WallBC):
            return eq.mirror_state(u_int), aux_int
        if isinstance(bc, DirichletBC):
            return np.asarray(bc.state(self._end_x(side), t), dtype=float), aux_int
        if isinstance(bc, SubsonicInflowBC):
            _, vel, _ = eq.primitives(u_int, aux_int)
            return eq.conservative(bc.rho, vel, bc.pressure, aux_int), aux_int
        if isinstance(bc, SubsonicOutflowBC):
            rho, vel, _ = eq.primitives(u_int, aux_int)
            return eq.conservative(rho, vel, bc.pressure, aux_int), aux_int
        if isinstance(bc, DischargeInflowBC):
            out = np.array(u_int, dtype=float, copy=True)
            out[..., 1] = bc.discharge
            return out, aux_int
        if isinstance(bc, HeightOutflowBC):
            _, vel = eq.primitives(u_int, aux_int)
            ah = aux_int[..., 0] * bc.height
            return np.stack(np.broadcast_arrays(ah, ah * vel), axis=-1), aux_int
        raise ValueError(f"unknown boundary condition {bc!r}")

    # --- the semi-discrete right-hand side --------------------------------------

    def rhs(self, u, t=0.0):
        """Evaluate du/dt for the global nodal state (K, N+1, nvars)."""
        eq = self.equation
        aux = self.aux

        # Volume terms: the full two-point flux matrix contracted against the
        # skew part of Q. No symmetry shortcut, the flux is non-symmetric.
        flux = eq.flux_ec(u[:, :, None, :], aux[:, :, None, :],
                          u[:, None, :, :], aux[:, None, :, :])
        out = np.einsum("ij,kijv->kiv", self._skew_q, flux)

        # Exterior states at every face; each element evaluates its own f*.
        u_left = np.empty_like(u[:, 0])
        u_right = np.empty_like(u[:, 0])
        aux_left = np.empty_like(aux[:, 0])
        aux_right = np.empty_like(aux[:, 0])
        u_left[1:] = u[:-1, -1]
        aux_left[1:] = aux[:-1, -1]
        u_right[:-1] = u[1:, 0]
        aux_right[:-1] = aux[1:, 0]
        if self.mesh.periodic:
            u_left[0] = u[-1, -1]
            aux_left[0] = aux[-1, -1]
            u_right[-1] = u[0, 0]
            aux_right[-1] = aux[0, 0]
        else:
            u_left[0], aux_left[0] = self._exterior("left", u[0, 0], t)
            u_right[-1], aux_right[-1] = self._exterior("right", u[-1, -1], t)

        mode = self.interface_flux
        out[:, 0] -= eq.interface_flux(u[:, 0], aux[:, 0], u_left, aux_left,
                                       normal=-1.0, mode=mode)
        out[:, -1] += eq.interface_flux(u[:, -1], aux[:, -1], u_right, aux_right,
                                        normal=+1.0, mode=mode)

        dudt = -out / self.mass[..., None]
        if self.source is not None:
            dudt = dudt + self.source(self.x, t)
        return dudt

    # --- diagnostics -------------------------------------------------------------

    def entropy_residual(self, u, dudt):
        """Total entropy production rate sum_k v^T M_k du/dt."""
        v = self.equation.entropy_vars(u, self.aux)
        return float(np.sum(self.mass * np.sum(v * dudt, axis=-1)))

    def conserved_totals(self, u):
        """Quadrature totals of each scaled conservative variable."""
        return np.sum(self.mass[..., None] * u, axis=(0, 1))

    def total_entropy(self, u):
        return float(np.sum(self.mass * self.equation.entropy(u, self.aux)))

    def rhs_norm(self, dudt):
        """Quadrature-weighted L2 norm of a rate, over all variables."""
        return float(np.sqrt(np.sum(self.mass[..., None] * dudt**2)))

    def l2_error(self, u, exact):
        """Quadrature L2 error of u/a against unscaled exact nodal values.

        ``exact`` is either a callable of the nodal coordinates returning the
        unscaled variables in the trailing axis, or a matching array.
        """
        vals = exact(self.x) if callable(exact) else exact
        vals = np.broadcast_to(np.asarray(vals, dtype=float), self.shape)
        diff = u / self.aux[..., 0:1] - vals
        return float(np.sqrt(np.sum(self.mass[..., None] * diff**2)))

    def unscaled(self, u):
        """Divide the state by the nodal width, recovering standard variables."""
        return u / self.aux[..., 0:1]


@dataclass(frozen=True)
class DiagnosticsSample:
    """One observation of the integral diagnostics along a run."""

    time: float
    entropy_residual: float
    totals: np.ndarray
    total_entropy: float


def interpolate_nodal(semi, values, x_query):
    """Evaluate a nodal field of ``semi`` at arbitrary points by element-wise
    Lagrange interpolation.

    ``values`` has shape (K, N+1[, nvars]); returns an array of shape
    (len(x_query)[, nvars]).
    """
    nodes = semi.op.nodes
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / diff.prod(axis=1)

    vertices = semi.mesh.vertices
    x_query = np.atleast_1d(np.asarray(x_query, dtype=float))
    out = np.empty(x_query.shape + values.shape[2:])
    for n, xq in enumerate(x_query):
        k = min(max(bisect.bisect_right(vertices, xq) - 1, 0),
                semi.num_elements - 1)
        xi = 2.0 * (xq - vertices[k]) / (vertices[k + 1] - vertices[k]) - 1.0
        d = xi - nodes
        hit = np.abs(d) < 1e-14
        if hit.any():
            weights = hit.astype(float)
        else:
            weights = bary / d
            weights /= weights.sum()
        out[n] = np.tensordot(weights, values[k], axes=1)
    return out
