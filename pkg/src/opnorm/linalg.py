"""Dense symmetric linear algebra: eigenpairs, diagonal scaling, DCT basis.

Eigen computations use a dense LAPACK path at small dimension and Lanczos
with full reorthogonalization above it; both are deterministic for a fixed
seed. Matrices are plain ``numpy`` arrays; symmetry is validated where a
routine requires it rather than enforced by a wrapper type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NonConvergenceError, PreconditionError

# Below this dimension a full dense eigendecomposition is cheaper and more
# robust than Lanczos.
DENSE_EIG_CUTOFF = 64

DEFAULT_EIG_TOL = 1e-7


@dataclass(frozen=True)
class EigenPair:
    """An approximate extreme eigenpair with its achieved residual.

    ``vector`` has unit 2-norm; ``residual`` is ||S v - value * v||_2.
    """

    value: float
    vector: np.ndarray
    residual: float


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^T)/2, exactly symmetric in floating point."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def is_symmetric(a: np.ndarray, rtol: float = 0.0) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if rtol == 0.0:
        return np.array_equal(a, a.T)
    scale = np.abs(a).max() if a.size else 0.0
    return np.abs(a - a.T).max() <= rtol * max(scale, 1e-300)


def require_symmetric(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError(f"{what} must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise PreconditionError(f"{what} must be exactly symmetric")
    return a


def require_nonneg_diagonal(m: np.ndarray, what: str = "matrix") -> None:
    d = np.diag(m)
    if (d < 0).any():
        i = int(np.argmin(d))
        raise PreconditionError(
            f"{what} has negative diagonal entry {d[i]:.6g} at index {i}")


def scaled_matrix(m: np.ndarray, w: np.ndarray) -> np.ndarray:
    """D^{-1/2} M D^{-1/2} for D = diag(w), computed entrywise.

    Entry (i, j) is M_ij / sqrt(w_i w_j); no inverse is materialized, so
    ill-conditioned weights only affect the entries they touch.
    """
    m = require_symmetric(m)
    w = np.asarray(w, dtype=float)
    if w.shape != (m.shape[0],):
        raise PreconditionError(
            f"weight vector has shape {w.shape}, expected ({m.shape[0]},)")
    if (w <= 0).any():
        raise PreconditionError("all scaling weights must be strictly positive")
    d = 1.0 / np.sqrt(w)
    # np.outer(d, d) is exactly symmetric (IEEE multiplication commutes),
    # so the result stays exactly symmetric; the chained broadcast
    # (m * d[:, None]) * d[None, :] would not be.
    return m * np.outer(d, d)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    # Fix the sign so the largest-magnitude entry is positive; keeps results
    # reproducible across LAPACK builds.
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _dense_max_eigenpair(s: np.ndarray) -> EigenPair:
    w, vecs = np.linalg.eigh(s)
    v = _canonical_sign(vecs[:, -1])
    lam = float(w[-1])
    residual = float(np.linalg.norm(s @ v - lam * v))
    return EigenPair(lam, v, residual)


def lanczos_max(matvec, n: int, tol: float, max_matvecs: int,
                seed: int = 0, v0: np.ndarray | None = None) -> EigenPair:
    """Largest eigenpair of a symmetric operator given only its matvec.

    Lanczos with full reorthogonalization; the starting vector is seeded
    uniform random (or the caller-supplied warm start v0) so runs are
    reproducible. Convergence is declared when the true residual
    ||S v - theta v|| drops below tol * max(1, |theta|).

    Raises NonConvergenceError (carrying the best iterate) if the matvec
    budget runs out first.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if v0 is not None:
        q = np.array(v0, dtype=float)
        q /= np.linalg.norm(q)
    else:
        rng = np.random.default_rng(seed)
        q = rng.uniform(-1.0, 1.0, size=n)
        q /= np.linalg.norm(q)

    max_steps = min(max_matvecs, n)
    # The basis grows in blocks: warm-started solves typically need only a
    # handful of columns, so a full (n, max_steps) allocation would be waste.
    basis = np.empty((n, min(32, max_steps)))
    alphas = np.empty(max_steps)
    betas = np.empty(max_steps)

    best: EigenPair | None = None
    matvecs = 0
    k = 0
    while k < max_steps and matvecs < max_matvecs:
        if k == basis.shape[1]:
            basis = np.concatenate(
                [basis, np.empty((n, min(basis.shape[1], max_steps - k)))],
                axis=1)
        basis[:, k] = q
        u = matvec(q)
        matvecs += 1
        alphas[k] = q @ u
        r = u - alphas[k] * q
        if k > 0:
            r -= betas[k - 1] * basis[:, k - 1]
        # Full reorthogonalization, applied twice (classical Gram-Schmidt
        # needs the second pass to restore orthogonality to machine level).
        for _ in range(2):
            r -= basis[:, :k + 1] @ (basis[:, :k + 1].T @ r)
        beta = np.linalg.norm(r)
        betas[k] = beta
        k += 1

        theta, s = _top_ritz(alphas[:k], betas[:k - 1])
        # Cheap residual bound: |beta_k * s_k|. Only pay for the full Ritz
        # vector once it looks converged.
        if beta * abs(s[-1]) <= tol * max(1.0, abs(theta)) or beta == 0.0:
            v = basis[:, :k] @ s
            v /= np.linalg.norm(v)
            v = _canonical_sign(v)
            if matvecs >= max_matvecs and beta != 0.0:
                break
            residual = float(np.linalg.norm(matvec(v) - theta * v))
            matvecs += 1
            pair = EigenPair(float(theta), v, residual)
            if residual <= tol * max(1.0, abs(theta)) or beta == 0.0:
                return pair
            if best is None or pair.residual < best.residual:
                best = pair
        if beta == 0.0:
            break  # invariant subspace exhausted
        q = r / beta

    theta, s = _top_ritz(alphas[:k], betas[:k - 1])
    v = basis[:, :k] @ s
    v /= np.linalg.norm(v)
    v = _canonical_sign(v)
    if matvecs < max_matvecs:
        residual = float(np.linalg.norm(matvec(v) - theta * v))
        if residual <= tol * max(1.0, abs(theta)):
            return EigenPair(float(theta), v, residual)
    else:
        residual = np.inf
    pair = EigenPair(float(theta), v, residual)
    if best is not None and best.residual < pair.residual:
        pair = best
    raise NonConvergenceError(
        f"Lanczos did not reach tol={tol:g} within {max_matvecs} matvecs "
        f"(best residual {pair.residual:.3g})",
        value=pair.value, vector=pair.vector, residual=pair.residual)


def _top_ritz(alphas: np.ndarray, betas: np.ndarray):
    k = len(alphas)
    if k == 1:
        return float(alphas[0]), np.ones(1)
    w, v = scipy.linalg.eigh_tridiagonal(
        alphas, betas, select="i", select_range=(k - 1, k - 1),
        check_finite=False)
    return float(w[0]), v[:, 0]


def max_eigenpair(s: np.ndarray, tol: float = DEFAULT_EIG_TOL,
                  max_matvecs: int = 2000, seed: int = 0) -> EigenPair:
    """Algebraically largest eigenpair of a symmetric matrix.

    Dense eigendecomposition below DENSE_EIG_CUTOFF, seeded Lanczos above.
    Raises NonConvergenceError carrying the best iterate when the matvec
    budget is exhausted (callers may inflate a bound instead of failing).
    """
    s = require_symmetric(s)
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    n = s.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        return _dense_max_eigenpair(s)
    return lanczos_max(lambda x: s @ x, n, tol, max_matvecs, seed)


def min_eigenvalue(s: np.ndarray, tol: float = DEFAULT_EIG_TOL,
                   max_matvecs: int = 2000, seed: int = 0) -> float:
    """Algebraically smallest eigenvalue, to absolute accuracy ~tol*||S||.

    Small matrices use the dense path; larger ones run Lanczos on the
    spectrum flipped with a Gershgorin shift: min eig(S) = c - max eig(cI-S).
    """
    s = require_symmetric(s)
    n = s.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        return float(np.linalg.eigvalsh(s)[0])
    c = float((np.abs(s).sum(axis=1) - np.abs(np.diag(s)) + np.diag(s)).max())
    pair = lanczos_max(lambda x: c * x - s @ x, n, tol, max_matvecs, seed)
    return c - pair.value


def dct_basis(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix: O[k, j] = c_k cos(pi (2j+1) k / (2n)).

    c_0 = sqrt(1/n) and c_k = sqrt(2/n) for k >= 1, so O O^T = I.
    """
    if n < 1:
        raise PreconditionError("basis dimension must be at least 1")
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    o = np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    o *= np.sqrt(2.0 / n)
    o[0, :] = np.sqrt(1.0 / n)
    return o
