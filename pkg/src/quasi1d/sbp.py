"""Diagonal-norm summation-by-parts operators on the reference interval [-1, 1].

Operators collocate on (N+1)-point Legendre-Gauss-Lobatto nodes: ``M`` holds
the positive quadrature weights, ``D`` differentiates nodal polynomial values
exactly up to degree N, ``Q = diag(M) @ D``, and the boundary matrix
``B = diag(-1, 0, ..., 0, +1)`` closes the discrete integration-by-parts
identity ``Q + Q.T = B``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "SBPOperator",
    "SBPResiduals",
    "build_sbp_operators",
    "lobatto_nodes_weights",
    "verify_sbp_identities",
]

# Newton iteration for the interior Lobatto nodes is robust well beyond the
# degrees used in practice, but convergence is only vouched for up to here.
MAX_DEGREE = 15

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


def _legendre(n, x):
    """Evaluate the Legendre polynomial P_n and its derivative at ``x``."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    if n == 0:
        return p_prev, dp_prev
    p = x.copy()
    dp = np.ones_like(x)
    for k in range(2, n + 1):
        p, p_prev = ((2 * k - 1) * x * p - (k - 1) * p_prev) / k, p
        dp, dp_prev = x * dp + k * p_prev, dp
    return p, dp


def lobatto_nodes_weights(N):
    """Nodes and weights of the (N+1)-point Legendre-Gauss-Lobatto rule.

    The nodes are the roots of (1 - x^2) P_N'(x), located by Newton iteration
    from Chebyshev-Gauss-Lobatto initial guesses; the rule integrates
    polynomials up to degree 2N - 1 exactly and the weights sum to 2.
    """
    if not isinstance(N, (int, np.integer)):
        raise TypeError(f"degree must be an integer, got {N!r}")
    if not 1 <= N <= MAX_DEGREE:
        raise ValueError(f"degree must satisfy 1 <= N <= {MAX_DEGREE}, got {N}")

    nodes = np.empty(N + 1)
    nodes[0], nodes[-1] = -1.0, 1.0
    if N > 1:
        x = -np.cos(np.pi * np.arange(1, N) / N)
        # Newton on f = (1 - x^2) P_N'; the Legendre ODE gives f' = -N(N+1) P_N.
        for _ in range(_NEWTON_MAXIT):
            p, dp = _legendre(N, x)
            dx = (1.0 - x * x) * dp / (N * (N + 1) * p)
            x += dx
            if np.max(np.abs(dx)) <= _NEWTON_TOL:
                break
        else:
            raise RuntimeError(f"Lobatto node iteration failed to converge for N={N}")
        # Enforce the symmetry of the rule exactly (also pins the midpoint to 0).
        x = 0.5 * (x - x[::-1])
        nodes[1:-1] = x

    p, _ = _legendre(N, nodes)
    weights = 2.0 / (N * (N + 1) * p * p)
    return nodes, weights


def _differentiation_matrix(nodes):
    """Nodal differentiation matrix of the Lagrange basis on ``nodes``."""
    n = nodes.size
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / diff.prod(axis=1)
    d = bary[None, :] / (bary[:, None] * diff)
    # Negative-sum trick: rows sum to zero exactly, so D annihilates constants.
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


@dataclass(frozen=True)
class SBPOperator:
    """Immutable diagonal-norm SBP operator for one reference element."""

    degree: int
    nodes: np.ndarray   # (N+1,) ascending, endpoints -1 and +1
    M: np.ndarray       # (N+1,) diagonal quadrature weights, all positive
    Q: np.ndarray       # (N+1, N+1) with Q = diag(M) @ D and Q + Q.T = B
    D: np.ndarray       # (N+1, N+1) nodal differentiation matrix
    B: np.ndarray       # (N+1,) diagonal of the boundary matrix

    def __post_init__(self):
        for arr in (self.nodes, self.M, self.Q, self.D, self.B):
            arr.flags.writeable = False

    @property
    def n_nodes(self):
        return self.degree + 1


def build_sbp_operators(N):
    """Construct the Lobatto-collocation SBP operator of degree ``N``."""
    nodes, weights = lobatto_nodes_weights(N)
    d = _differentiation_matrix(nodes)
    q = weights[:, None] * d
    b = np.zeros(N + 1)
    b[0], b[-1] = -1.0, 1.0
    return SBPOperator(degree=N, nodes=nodes, M=weights, Q=q, D=d, B=b)


@dataclass(frozen=True)
class SBPResiduals:
    """Maximum residuals of the defining SBP identities."""

    sbp_identity: float      # max |Q + Q.T - B|
    consistency: float       # max |Q @ 1|
    differentiation: float   # max relative error of D on monomials up to degree N
    tol: float

    @property
    def passed(self):
        return max(self.sbp_identity, self.consistency, self.differentiation) <= self.tol


def verify_sbp_identities(op, tol=1e-12):
    """Check ``Q + Q.T = B``, ``Q @ 1 = 0``, and exact differentiation.

    Returns the maximum residual of each identity; ``differentiation`` is the
    worst relative error of ``D`` applied to monomials x^k for k <= N.
    """
    sbp_res = float(np.max(np.abs(op.Q + op.Q.T - np.diag(op.B))))
    cons_res = float(np.max(np.abs(op.Q @ np.ones(op.n_nodes))))

    diff_res = 0.0
    for k in range(op.degree + 1):
        exact = k * op.nodes ** (k - 1) if k > 0 else np.zeros_like(op.nodes)
        resid = np.max(np.abs(op.D @ op.nodes**k - exact))
        scale = max(1.0, np.max(np.abs(exact)))
        diff_res = max(diff_res, float(resid / scale))

    return SBPResiduals(sbp_identity=sbp_res, consistency=cons_res,
                        differentiation=diff_res, tol=tol)
