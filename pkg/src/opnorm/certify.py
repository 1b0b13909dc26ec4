"""Multiplicative-weights solver certifying bounds on max x^T M x, ||x||_inf <= 1.

The primal SDP relaxes the quadratic program to PSD matrices X with
X_ii <= 1; its dual minimizes sum(y) over y >= 0 with diag(y) >= M in the
PSD order. For any positive weight vector a with sum(a) = n, the largest
eigenvalue lam of diag(a)^{-1/2} M diag(a)^{-1/2} makes y = lam * a dual
feasible with value n * lam, so every iteration of the solver yields a
valid upper bound; the weights are then updated multiplicatively from the
constraint violations of the eigenvector iterate. The best per-iteration
dual pair is returned as a certificate, together with a near-feasible
primal candidate (the running average of the rank-one iterates) whose
objective matches the running-average dual value.

Because the eigensolver is inexact, emitted bounds use an inflated
eigenvalue lam_cert = lam_est * (1 + eig_tol) + residual, and every
certificate is re-verified via a minimum-eigenvalue check of
diag(y) - M, with the inflation gap doubled on failure (3 retries).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonConvergenceError, PreconditionError
from .linalg import (
    DENSE_EIG_CUTOFF,
    lanczos_max,
    min_eigenvalue,
    require_nonneg_diagonal,
    require_symmetric,
)

# Above this dimension only diag(X) and <M, X> are tracked; the averaged
# primal matrix itself would cost O(n^2) memory per solve.
FULL_MATRIX_LIMIT = 512

# Hard default cap on iterations; the provable count n ln n / delta^3 is
# far beyond what the early stops need in practice.
DEFAULT_ITER_CAP = 5000

VERIFY_SUM_RTOL = 1e-9
VERIFY_MARGIN_RTOL = 1e-8  # times ||M||_F
VERIFY_RETRIES = 3

VERIFIED = "verified"
UNVERIFIED = "unverified"
FAILED = "failed"

STOP_V_INF = "v_inf_le_1_plus_delta"
STOP_MAX_DIAG = "max_diag_le_1_plus_delta"
STOP_STALLED = "best_bound_stalled"


class IterationCapWarning(UserWarning):
    """The default iteration budget was truncated below the provable count."""


class EigensolverWarning(UserWarning):
    """The eigensolver failed to converge; the bound was inflated."""


@dataclass
class CertifyParams:
    """Solver parameters.

    rho and max_iters default to the provable settings n/delta and
    min(ceil(n ln n / delta^3), DEFAULT_ITER_CAP) once n is known.
    practical_stop additionally stops when the best bound has improved by
    less than stall_rtol (relative) for stall_window consecutive
    iterations; it is off by default.
    """

    delta: float = 0.1
    rho: float | None = None
    max_iters: int | None = None
    eig_tol: float = 1e-7
    seed: int = 0
    practical_stop: bool = False
    stall_window: int = 25
    stall_rtol: float = 1e-6
    eig_max_matvecs: int = 2000

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise PreconditionError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.rho is not None and self.rho <= 0:
            raise PreconditionError("rho must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise PreconditionError("max_iters must be at least 1")
        if self.eig_tol <= 0:
            raise PreconditionError("eig_tol must be positive")

    def resolved_rho(self, n: int) -> float:
        return self.rho if self.rho is not None else n / self.delta

    def resolved_max_iters(self, n: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        full = math.ceil(n * math.log(max(n, 2)) / self.delta**3)
        if full > DEFAULT_ITER_CAP:
            warnings.warn(
                f"default iteration count {full} truncated to {DEFAULT_ITER_CAP}; "
                "pass max_iters explicitly for the provable schedule",
                IterationCapWarning, stacklevel=3)
            return DEFAULT_ITER_CAP
        return full


def provable_iterations(n: int, delta: float, rho: float | None = None) -> int:
    """Iteration count for which the primal average satisfies diag <= 1+8*delta."""
    if rho is None:
        rho = n / delta
    return math.ceil(rho * math.log(max(n, 2)) / ((1.0 - delta) * delta**2))


@dataclass
class IterationTrace:
    """Per-iteration history of the solver (running averages, not iterates)."""

    dual_bound: np.ndarray        # n * lam_cert at each iteration
    best_bound: np.ndarray        # running minimum of dual_bound
    avg_dual_sum: np.ndarray      # sum of the running-average dual vector
    avg_primal_value: np.ndarray  # <M, X_avg>
    max_avg_diag: np.ndarray      # max_i of the running-average X_ii
    v_inf: np.ndarray             # ||v||_inf of the iterate


@dataclass
class Certificate:
    """A dual vector proving bound >= SDP value, plus solve metadata.

    Invariants: y >= 0 elementwise and bound == sum(y) up to 1e-9 relative.
    When verified, min eig(diag(y) - M) >= -1e-8 * ||M||_F.
    """

    bound: float
    y: np.ndarray
    iterations_used: int
    early_stopped: bool
    stop_reason: str | None
    verified: str = UNVERIFIED
    margin: float | None = None
    trace: IterationTrace | None = field(default=None, repr=False)


@dataclass
class PrimalCandidate:
    """Running average X of the rank-one iterates v v^T, kept implicitly.

    X is PSD by construction. value is <M, X> and equals the sum of the
    paired running-average dual vector (paired_dual_sum) up to rounding;
    the returned Certificate's bound may sit below that sum because it
    tracks the best single iteration. full_matrix is retained only for
    n <= FULL_MATRIX_LIMIT.
    """

    diag: np.ndarray
    value: float
    rank_one_count: int
    paired_dual_sum: float
    full_matrix: np.ndarray | None = field(default=None, repr=False)


def _validate_qp_input(m: np.ndarray) -> np.ndarray:
    m = require_symmetric(m, "QP matrix")
    require_nonneg_diagonal(m, "QP matrix")
    return m


def _scaled_eigenpair(m: np.ndarray, d: np.ndarray, eig_tol: float,
                      max_matvecs: int, seed: int,
                      v0: np.ndarray | None = None):
    """Top eigenpair of diag(d) M diag(d) for d = weights^{-1/2}.

    Returns (lam_est, u, residual, failed). On eigensolver failure the best
    iterate is returned with failed=True so the caller can inflate.
    """
    n = m.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        s = m * np.outer(d, d)
        w, vecs = np.linalg.eigh(s)
        u = vecs[:, -1]
        lam = float(w[-1])
        residual = float(np.linalg.norm(s @ u - lam * u))
        return lam, u, residual, False
    matvec = lambda x: d * (m @ (d * x))
    try:
        pair = lanczos_max(matvec, n, eig_tol, max_matvecs, seed, v0=v0)
        return pair.value, pair.vector, pair.residual, False
    except NonConvergenceError as err:
        residual = err.residual if np.isfinite(err.residual) else 1.0
        return err.value, err.vector, residual, True


def _inflate(lam_est: float, residual: float, eig_tol: float,
             failed: bool) -> float:
    lam = lam_est + abs(lam_est) * eig_tol + residual
    if failed:
        lam += abs(lam) * eig_tol
    return lam


def dual_bound(m: np.ndarray, alpha: np.ndarray, eig_tol: float = 1e-7,
               seed: int = 0, max_matvecs: int = 2000):
    """Dual-feasible pair (n*lam, lam*alpha) for a given weight vector.

    alpha must be strictly positive and sum to n (callers pass the
    corrected weights). The emitted lam is inflated by the eigensolver
    tolerance and residual so the bound survives an inexact eigensolver.
    """
    m = _validate_qp_input(m)
    n = m.shape[0]
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n,):
        raise PreconditionError(f"alpha has shape {alpha.shape}, expected ({n},)")
    if (alpha <= 0).any():
        raise PreconditionError("alpha must be strictly positive")
    if abs(alpha.sum() - n) > 1e-9 * n:
        raise PreconditionError(f"alpha must sum to n={n}, got {alpha.sum()!r}")
    d = 1.0 / np.sqrt(alpha)
    lam_est, _, residual, failed = _scaled_eigenpair(
        m, d, eig_tol, max_matvecs, seed)
    if failed:
        warnings.warn("eigensolver did not converge; dual bound inflated",
                      EigensolverWarning, stacklevel=2)
    lam = _inflate(lam_est, residual, eig_tol, failed)
    return n * lam, lam * alpha


def certify_sdp(m: np.ndarray, params: CertifyParams | None = None):
    """Run the weighted-eigenvalue iteration and return (Certificate, PrimalCandidate).

    Each iteration: correct the weights (a_bar = (1-delta) a + delta),
    take the top eigenpair (lam, u) of the a_bar-scaled matrix, form the
    iterate v = sqrt(n) diag(a_bar)^{-1/2} u, fold (lam * a_bar, v v^T)
    into the running dual/primal averages, early-stop when
    ||v||_inf <= 1+delta or max_i X_ii <= 1+delta, and otherwise update
    a_i *= exp((delta/rho) (v_i^2 - 1)) and renormalize to sum n. The best
    per-iteration dual bound n*lam is tracked throughout.

    On the ||v||_inf stop the current iterate's (n*lam, lam*a_bar) and
    X = v v^T are returned; on the max-diag stop (and on running out the
    budget, which is not an error) the tracked best certificate and the
    running-average X are returned. The certificate is verified before it
    is returned, inflating the eigenvalue gap on failure (3 retries).
    """
    m = _validate_qp_input(m)
    if params is None:
        params = CertifyParams()
    n = m.shape[0]
    delta = params.delta
    rho = params.resolved_rho(n)
    max_iters = params.resolved_max_iters(n)
    sqrt_n = math.sqrt(n)
    track_full = n <= FULL_MATRIX_LIMIT

    alpha = np.ones(n)
    y_sum = np.zeros(n)
    diag_sum = np.zeros(n)
    value_sum = 0.0
    x_sum = np.zeros((n, n)) if track_full else None

    best_bound = np.inf
    best_state = None  # (lam_est, residual, failed, a_bar)
    best_since = 0

    tr_dual, tr_best, tr_ysum, tr_pval, tr_maxd, tr_vinf = [], [], [], [], [], []

    stop_reason = None
    iterations = 0
    final_from_iterate = None

    # Warm start for the per-iteration eigensolve: the scaled matrix drifts
    # slowly, so the previous eigenvector (mixed with a fixed seeded
    # direction to avoid starting in an invariant subspace) converges in a
    # few Lanczos steps. The mix keeps runs deterministic under the seed.
    mix = np.random.default_rng(params.seed).uniform(-1.0, 1.0, size=n)
    mix /= np.linalg.norm(mix)
    prev_u = None

    for t in range(max_iters):
        iterations = t + 1
        a_bar = (1.0 - delta) * alpha + delta
        d = 1.0 / np.sqrt(a_bar)
        # Cold-start periodically: a warm start can lock onto the wrong
        # branch after an eigenvalue crossing and silently track a
        # non-maximal eigenpair.
        warm = prev_u is not None and t % 16 != 0
        v0 = prev_u + 0.01 * mix if warm else None
        lam_est, u, residual, failed = _scaled_eigenpair(
            m, d, params.eig_tol, params.eig_max_matvecs, params.seed, v0=v0)
        prev_u = u
        if failed:
            warnings.warn(
                f"eigensolver did not converge at iteration {t}; bound inflated",
                EigensolverWarning, stacklevel=2)
        # Exact Rayleigh quotient of u on the scaled matrix; used for the
        # uninflated running averages so <M, X> == sum(y_avg) holds.
        su = d * (m @ (d * u))
        lam_rq = float(u @ su)
        v = sqrt_n * d * u
        vsq = v * v

        y_sum += lam_rq * a_bar
        value_sum += n * lam_rq
        diag_sum += vsq
        if track_full:
            x_sum += v[:, None] * v[None, :]

        lam_cert = _inflate(lam_est, residual, params.eig_tol, failed)
        cand_bound = n * lam_cert
        if cand_bound < best_bound:
            if best_bound - cand_bound > params.stall_rtol * abs(best_bound):
                best_since = t
            best_bound = cand_bound
            best_state = (lam_est, residual, failed, a_bar)

        count = t + 1
        v_inf = float(np.abs(v).max())
        max_avg_diag = float(diag_sum.max()) / count

        tr_dual.append(cand_bound)
        tr_best.append(best_bound)
        tr_ysum.append(float(y_sum.sum()) / count)
        if track_full:
            tr_pval.append(float(np.einsum("ij,ij->", m, x_sum)) / count)
        else:
            tr_pval.append(value_sum / count)
        tr_maxd.append(max_avg_diag)
        tr_vinf.append(v_inf)

        if v_inf <= 1.0 + delta:
            stop_reason = STOP_V_INF
            final_from_iterate = (lam_est, residual, failed, a_bar, lam_rq, v)
            break
        if max_avg_diag <= 1.0 + delta:
            stop_reason = STOP_MAX_DIAG
            break
        if params.practical_stop and t - best_since >= params.stall_window:
            stop_reason = STOP_STALLED
            break

        z = (delta / rho) * (vsq - 1.0)
        z -= z.max()  # renormalization-invariant; prevents exp overflow
        alpha = alpha * np.exp(z)
        alpha *= n / alpha.sum()

    trace = IterationTrace(
        dual_bound=np.array(tr_dual), best_bound=np.array(tr_best),
        avg_dual_sum=np.array(tr_ysum), avg_primal_value=np.array(tr_pval),
        max_avg_diag=np.array(tr_maxd), v_inf=np.array(tr_vinf))

    if stop_reason == STOP_V_INF:
        lam_est, residual, failed, a_bar, lam_rq, v = final_from_iterate
        cert_state = (lam_est, residual, failed, a_bar)
        primal = PrimalCandidate(
            diag=v * v, value=n * lam_rq, rank_one_count=1,
            paired_dual_sum=float((lam_rq * a_bar).sum()),
            full_matrix=np.outer(v, v) if track_full else None)
    else:
        cert_state = best_state
        count = iterations
        primal = PrimalCandidate(
            diag=diag_sum / count, value=value_sum / count,
            rank_one_count=count, paired_dual_sum=float(y_sum.sum()) / count,
            full_matrix=x_sum / count if track_full else None)

    cert = _verified_certificate(
        m, cert_state, params, iterations,
        early_stopped=stop_reason is not None, stop_reason=stop_reason,
        trace=trace)
    return cert, primal


def _verified_certificate(m, state, params, iterations, early_stopped,
                          stop_reason, trace) -> Certificate:
    n = m.shape[0]
    lam_est, residual, failed, a_bar = state
    if n > DENSE_EIG_CUTOFF:
        # Recertify the chosen weights with a cold-started solve; warm
        # starts inside the loop may have under-estimated the eigenvalue.
        # Both estimates are Rayleigh quotients (lower estimates), so keep
        # whichever certifies higher.
        lam2, _, res2, failed2 = _scaled_eigenpair(
            m, 1.0 / np.sqrt(a_bar), params.eig_tol,
            params.eig_max_matvecs, params.seed, v0=None)
        if _inflate(lam2, res2, params.eig_tol, failed2) > \
                _inflate(lam_est, residual, params.eig_tol, failed):
            lam_est, residual, failed = lam2, res2, failed2
    lam_cert = _inflate(lam_est, residual, params.eig_tol, failed)
    gap = lam_cert - lam_est

    status, margin = UNVERIFIED, None
    for attempt in range(VERIFY_RETRIES + 1):
        lam = lam_est + gap * (2.0 ** attempt)
        y = lam * a_bar
        bound = float(y.sum())
        cert = Certificate(bound=bound, y=y, iterations_used=iterations,
                           early_stopped=early_stopped, stop_reason=stop_reason,
                           trace=trace)
        ok, margin = verify_certificate(m, cert)
        if ok:
            status = VERIFIED
            break
        status = FAILED
        if gap == 0.0:
            gap = max(abs(lam_est), 1.0) * params.eig_tol
    cert.verified = status
    cert.margin = margin
    return cert


# Up to this dimension the verification margin comes from a dense
# eigensolve. The margin of an inflated certificate sits within
# ~1e-7 * lambda * delta of zero, far below what an iterative min-eig
# method can resolve against the 1e-8 * ||M||_F threshold, so a direct
# factorization is the only affordable sound check.
VERIFY_DENSE_LIMIT = 3072


def verify_certificate(m: np.ndarray, cert: Certificate):
    """Independently check a certificate: y >= 0, sum matches the bound,
    and diag(y) - M is PSD up to -1e-8 * ||M||_F.

    Returns (ok, margin) where margin is the minimum eigenvalue of
    diag(y) - M (dense eigensolve up to VERIFY_DENSE_LIMIT; above that the
    PSD decision comes from a Cholesky factorization of the
    threshold-shifted matrix and margin is a best-effort estimate).
    Failure is a legitimate return value, not an error.
    """
    m = require_symmetric(m, "matrix")
    n = m.shape[0]
    y = np.asarray(cert.y, dtype=float)
    if y.shape != (n,):
        raise PreconditionError(f"certificate y has shape {y.shape}, expected ({n},)")
    ok = bool((y >= 0).all())
    ok &= abs(y.sum() - cert.bound) <= VERIFY_SUM_RTOL * abs(cert.bound)
    s = np.diag(y) - m
    tau = VERIFY_MARGIN_RTOL * float(np.linalg.norm(m))
    if n <= VERIFY_DENSE_LIMIT:
        margin = float(np.linalg.eigvalsh(s)[0])
        ok &= margin >= -tau
        return ok, margin
    try:
        np.linalg.cholesky(s + (tau + np.finfo(float).tiny) * np.eye(n))
        psd_ok = True
    except np.linalg.LinAlgError:
        psd_ok = False
    ok &= psd_ok
    try:
        margin = min_eigenvalue(s, tol=1e-6, max_matvecs=800)
    except NonConvergenceError:
        # Certified floor from the Cholesky test; the exact value is
        # unresolvable at this scale.
        margin = -tau if psd_ok else -float(np.linalg.norm(s))
    if psd_ok:
        margin = max(margin, -tau)
    return ok, float(margin)


def is_projection_matrix(p: np.ndarray, tol: float = 1e-9) -> bool:
    p = np.asarray(p, dtype=float)
    return (p.ndim == 2 and p.shape[0] == p.shape[1]
            and np.array_equal(p, p.T) and np.abs(p @ p - p).max() <= tol)


def infty_to_2_certificate(p: np.ndarray, params: CertifyParams | None = None):
    """Certify ||P||_{inf->2} via the squared norm's QP form.

    For an orthogonal projection P the QP matrix is P itself (P^T P = P);
    otherwise it is P^T P. Returns (kappa, Certificate, PrimalCandidate, M)
    where kappa = sqrt(certified bound on ||P||_{inf->1} of M).
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise PreconditionError(f"expected a matrix, got shape {p.shape}")
    if is_projection_matrix(p):
        m = p
    else:
        gram = p.T @ p
        m = (gram + gram.T) / 2.0
    cert, primal = certify_sdp(m, params)
    kappa = math.sqrt(max(cert.bound, 0.0))
    return kappa, cert, primal, m


def infty_to_2_bound(p: np.ndarray, params: CertifyParams | None = None) -> float:
    """Certified upper bound on ||P||_{inf->2} = sqrt(||P^T P||_{inf->1})."""
    kappa, _, _, _ = infty_to_2_certificate(p, params)
    return kappa
