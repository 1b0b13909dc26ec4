"""Exact brute-force ground truth for max x^T M x over the unit cube.

With a non-negative diagonal the quadratic form is coordinatewise convex,
so the maximum over ||x||_inf <= 1 is attained at a vertex of {-1,+1}^n.
Negation symmetry (x and -x give the same value) lets us fix x_0 = +1 and
enumerate 2^(n-1) vertices. Vertices are evaluated in vectorized blocks,
each value computed directly from the quadratic form, so the oracle is
exact to machine precision with no incremental drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import OracleSizeError, PreconditionError
from .linalg import require_nonneg_diagonal, require_symmetric

# Hard cap: 2^23 vertices. Refusal above this is deliberate -- an oracle
# must never silently approximate.
MAX_ORACLE_DIM = 24

_BLOCK_BITS = 16


@dataclass(frozen=True)
class QpSolution:
    """Exact maximum of x^T M x over the hypercube and a maximizing vertex."""

    value: float
    argmax: np.ndarray


def _sign_block(start: int, count: int, n_free: int) -> np.ndarray:
    """Columns are the sign patterns of indices start..start+count-1."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    bits = (idx[None, :] >> np.arange(n_free, dtype=np.uint64)[:, None]) & 1
    return 1.0 - 2.0 * bits.astype(float)


def brute_force_qp(m: np.ndarray, fix_first_coordinate: bool = True) -> QpSolution:
    """Enumerate hypercube vertices and return the exact QP maximum.

    ``fix_first_coordinate=False`` enumerates the full cube instead of the
    negation-reduced half; the result is identical and exists so tests can
    check that symmetry reduction loses nothing.
    """
    m = require_symmetric(m, "oracle input")
    require_nonneg_diagonal(m, "oracle input")
    n = m.shape[0]
    if n > MAX_ORACLE_DIM:
        raise OracleSizeError(
            f"brute-force oracle is capped at n={MAX_ORACLE_DIM}, got n={n}; "
            "refusing rather than approximating")
    if n == 1:
        x = np.ones(1)
        return QpSolution(float(x @ m @ x), x)

    n_free = n - 1 if fix_first_coordinate else n
    total = 1 << n_free
    block = 1 << min(_BLOCK_BITS, n_free)

    best_val = -np.inf
    best_x = None
    for start in range(0, total, block):
        count = min(block, total - start)
        signs = _sign_block(start, count, n_free)
        if fix_first_coordinate:
            x = np.vstack([np.ones((1, count)), signs])
        else:
            x = signs
        vals = np.einsum("ik,ik->k", x, m @ x)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_x = x[:, j].copy()

    # Recompute at the winning vertex so value == argmax^T M argmax holds in
    # the same arithmetic callers will use.
    value = float(best_x @ m @ best_x)
    return QpSolution(value, best_x)


def infty_to_1_exact(p: np.ndarray) -> float:
    """Exact infinity->1 norm of P^T P, i.e. the squared infinity->2 norm of P.

    Orthogonal projections (P symmetric with P^2 = P) are passed to the
    oracle directly since then P^T P = P.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise PreconditionError(f"expected a matrix, got shape {p.shape}")
    if (p.shape[0] == p.shape[1] and np.array_equal(p, p.T)
            and np.abs(p @ p - p).max() <= 1e-9):
        m = p
    else:
        m = p.T @ p
        m = (m + m.T) / 2.0
    return brute_force_qp(m).value
