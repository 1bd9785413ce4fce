"""Gauss-Legendre quadrature for the velocity variable.

The parity-based relaxation solver integrates over v in [0, 1] with an
N-point rule; the explicit upwind solver integrates over v in [-1, 1]
with a symmetric 2N-point rule.  Both come out of :func:`gauss_rule`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["QuadratureRule", "gauss_rule"]

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gauss-Legendre rule on ``[a, b]``.

    An n-point rule integrates polynomials of degree up to 2n - 1
    exactly.  Nodes are strictly increasing and strictly inside the
    interval; weights are positive and sum to the interval length.
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float] = field(default=(-1.0, 1.0))

    @property
    def n_points(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum of samples taken at the rule's nodes."""
        return float(np.dot(self.weights, values))


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate P_n and its derivative at x via the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_rule(n_points: int, a: float, b: float) -> QuadratureRule:
    """Build the n-point Gauss-Legendre rule on ``[a, b]``.

    Roots of the Legendre polynomial are found by Newton iteration
    seeded with the Chebyshev-angle estimates; only half the roots are
    computed and the rest mirrored, so rules on symmetric intervals are
    exactly symmetric (v_{-k} = -v_k, w_{-k} = w_k).

    Parameters
    ----------
    n_points : int
        Number of nodes, at least 1.
    a, b : float
        Interval endpoints, a < b.

    Raises
    ------
    ValueError
        If ``n_points < 1`` or ``a >= b``.
    """
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError(f"interval endpoints must be finite, got ({a}, {b})")
    if a >= b:
        raise ValueError(f"need a < b, got a={a}, b={b}")

    n = int(n_points)
    ref_nodes = np.empty(n)
    ref_weights = np.empty(n)

    if n == 1:
        ref_nodes[0] = 0.0
        ref_weights[0] = 2.0
    else:
        half = (n + 1) // 2
        for i in range(half):
            z = math.cos(math.pi * (i + 0.75) / (n + 0.5))
            converged = False
            for _ in range(_NEWTON_MAX_ITER):
                p, dp = _legendre(n, np.array([z]))
                dz = p[0] / dp[0]
                z -= dz
                if abs(dz) <= _NEWTON_TOL:
                    converged = True
                    break
            if not converged:
                raise RuntimeError(
                    f"Legendre root {i} failed to converge for n={n}"
                )
            _, dp = _legendre(n, np.array([z]))
            w = 2.0 / ((1.0 - z * z) * dp[0] ** 2)
            # z runs from the largest positive root downwards; mirror it
            ref_nodes[i] = -z
            ref_nodes[n - 1 - i] = z
            ref_weights[i] = w
            ref_weights[n - 1 - i] = w

    mid = 0.5 * (a + b)
    scale = 0.5 * (b - a)
    nodes = mid + scale * ref_nodes
    weights = scale * ref_weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights, interval=(float(a), float(b)))
