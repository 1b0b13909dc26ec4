"""Certified operator-norm bounds, robust projections, and robustness translation.

The package provides:

* a multiplicative-weights SDP solver that certifies upper bounds on the
  infinity->1 / infinity->2 operator norms of symmetric matrices, with
  verifiable dual certificates (:mod:`opnorm.certify`),
* an exact brute-force oracle for the underlying quadratic program at
  small dimension (:mod:`opnorm.oracle`),
* PCA / sparse-PCA search for low-rank projections with small certified
  infinity->2 norm (:mod:`opnorm.projection`),
* randomized-smoothing radius arithmetic and l2 -> linf translation of
  certified accuracy curves (:mod:`opnorm.smoothing`),
* dense symmetric linear algebra and DCT basis construction
  (:mod:`opnorm.linalg`) and file I/O (:mod:`opnorm.fileio`).
"""

import os as _os

# OPNORM_THREADS caps BLAS parallelism; must be set before numpy loads BLAS,
# which is why this sits at the top of the package __init__.
_threads = _os.environ.get("OPNORM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .exceptions import (
    NoFeasibleProjectionError,
    NonConvergenceError,
    OracleSizeError,
    PreconditionError,
)
from .linalg import (
    EigenPair,
    dct_basis,
    max_eigenpair,
    min_eigenvalue,
    scaled_matrix,
    symmetrize,
)
from .certify import (
    Certificate,
    CertifyParams,
    PrimalCandidate,
    certify_sdp,
    dual_bound,
    infty_to_2_bound,
    provable_iterations,
    verify_certificate,
)
from .oracle import QpSolution, brute_force_qp, infty_to_1_exact
from .projection import (
    DataMatrix,
    ProjectionMatrix,
    block_diagonal,
    make_planted_instance,
    pca_projection,
    reconstruction_error,
    robust_projection,
    sparse_pca_projection,
)
from .smoothing import (
    RobustnessRecord,
    SmoothingEstimate,
    accuracy_curve_translate,
    certified_accuracy,
    certified_radius,
    noise_sigma,
    normal_quantile,
    subspace_noise_sample,
    translate_radius,
)

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CertifyParams",
    "DataMatrix",
    "EigenPair",
    "NoFeasibleProjectionError",
    "NonConvergenceError",
    "OracleSizeError",
    "PreconditionError",
    "PrimalCandidate",
    "ProjectionMatrix",
    "QpSolution",
    "RobustnessRecord",
    "SmoothingEstimate",
    "accuracy_curve_translate",
    "block_diagonal",
    "brute_force_qp",
    "certified_accuracy",
    "certified_radius",
    "certify_sdp",
    "dct_basis",
    "dual_bound",
    "infty_to_1_exact",
    "infty_to_2_bound",
    "make_planted_instance",
    "max_eigenpair",
    "min_eigenvalue",
    "noise_sigma",
    "normal_quantile",
    "pca_projection",
    "provable_iterations",
    "reconstruction_error",
    "robust_projection",
    "scaled_matrix",
    "sparse_pca_projection",
    "subspace_noise_sample",
    "symmetrize",
    "translate_radius",
    "verify_certificate",
]
