"""Smoothing-radius arithmetic against independent quantile oracles."""

import math

import numpy as np
import pytest
import scipy.special

from opnorm import (
    CertifyParams,
    PreconditionError,
    ProjectionMatrix,
    RobustnessRecord,
    SmoothingEstimate,
    accuracy_curve_translate,
    certified_accuracy,
    certified_radius,
    certify_sdp,
    dct_basis,
    noise_sigma,
    normal_quantile,
    subspace_noise_sample,
    symmetrize,
    translate_radius,
)
from opnorm.smoothing import ProbabilityClampWarning

PHI_1 = 0.8413447460685429    # Phi(1)
PHI_M1 = 0.15865525393145707  # Phi(-1)


def quantile_by_bisection(p):
    """Independent oracle: invert Phi(x) = 0.5 erfc(-x/sqrt(2)) by bisection.

    The upper half folds onto the lower so erfc keeps relative precision.
    """
    if p > 0.5:
        return -quantile_by_bisection(1.0 - p)
    lo, hi = -40.0, 0.5
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


class TestNormalQuantile:
    def test_median(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_against_bisection_oracle(self):
        for p in (1e-12, 1e-9, 1e-4, 0.01, 0.2, 0.5, 0.77, 0.99, 1 - 1e-9):
            assert normal_quantile(p) == pytest.approx(
                quantile_by_bisection(p), abs=1e-10, rel=1e-10)

    def test_against_scipy(self):
        grid = np.linspace(1e-10, 1 - 1e-10, 997)
        ours = np.array([normal_quantile(p) for p in grid])
        theirs = scipy.special.ndtri(grid)
        assert np.abs(ours - theirs).max() <= 1e-10 * np.maximum(
            1.0, np.abs(theirs)).max()

    def test_symmetry(self):
        for p in (0.01, 0.3, 0.45):
            assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p),
                                                       rel=1e-12, abs=1e-12)

    def test_domain(self):
        with pytest.raises(PreconditionError):
            normal_quantile(0.0)
        with pytest.raises(PreconditionError):
            normal_quantile(1.0)


class TestCertifiedRadius:
    def test_tie_gives_zero(self):
        assert certified_radius(SmoothingEstimate(1.0, 0.5, 0.5)) == 0.0

    def test_unit_radius_case(self):
        est = SmoothingEstimate(1.0, PHI_1, PHI_M1)
        assert certified_radius(est) == pytest.approx(1.0, abs=1e-6)

    def test_linear_in_sigma(self):
        r1 = certified_radius(SmoothingEstimate(1.0, 0.9, 0.05))
        r2 = certified_radius(SmoothingEstimate(2.0, 0.9, 0.05))
        assert r2 == pytest.approx(2.0 * r1, rel=1e-12)

    def test_monotone_in_probabilities(self):
        base = certified_radius(SmoothingEstimate(1.0, 0.8, 0.1))
        assert certified_radius(SmoothingEstimate(1.0, 0.85, 0.1)) > base
        assert certified_radius(SmoothingEstimate(1.0, 0.8, 0.05)) > base

    def test_boundary_probability_clamped_with_warning(self):
        with pytest.warns(ProbabilityClampWarning):
            r = certified_radius(SmoothingEstimate(1.0, 1.0, 0.0))
        assert np.isfinite(r) and r > 0

    def test_estimate_validation(self):
        with pytest.raises(PreconditionError):
            SmoothingEstimate(1.0, 0.3, 0.4)
        with pytest.raises(PreconditionError):
            SmoothingEstimate(0.0, 0.6, 0.2)
        with pytest.raises(PreconditionError):
            SmoothingEstimate(1.0, 0.7, 0.5)


class TestTranslateRadius:
    def test_baseline_sqrt_n(self):
        assert translate_radius(1.0, 32.0) == 0.03125

    def test_zero_radius(self):
        assert translate_radius(0.0, 17.0) == 0.0

    def test_combined_cifar_bound(self):
        # 1/30.22 = 0.0330906...
        assert translate_radius(1.0, 30.22) == pytest.approx(0.033091, abs=1e-6)

    def test_rejects_bad_kappa(self):
        with pytest.raises(PreconditionError):
            translate_radius(1.0, 0.0)


class TestNoiseSigma:
    def test_projected_scale(self):
        assert noise_sigma(0.5, 1024, 200, 0.5) == pytest.approx(
            0.5 * 0.5 * math.sqrt(1024 / 200), rel=1e-12)
        assert noise_sigma(0.5, 1024, 200, 0.5) == pytest.approx(0.565685,
                                                                 abs=1e-6)

    def test_full_rank_identity(self):
        assert noise_sigma(1.0, 64, 64, 0.37) == pytest.approx(0.37, rel=1e-12)

    def test_zero_lambda(self):
        assert noise_sigma(0.0, 64, 8, 0.5) == 0.0

    def test_zero_rank_rejected(self):
        with pytest.raises(PreconditionError):
            noise_sigma(0.5, 64, 0, 0.5)


class TestCertifiedAccuracy:
    def test_all_correct_above_threshold(self):
        records = [RobustnessRecord(True, 1.0)] * 5
        assert certified_accuracy(records, 0.5) == 1.0

    def test_natural_accuracy_at_zero(self):
        records = [RobustnessRecord(True, 1.0)] * 3 + \
                  [RobustnessRecord(False, 0.0)] * 3
        assert certified_accuracy(records, 0.0) == 0.5

    def test_non_increasing_in_epsilon(self):
        rng = np.random.default_rng(0)
        records = [RobustnessRecord(bool(rng.integers(2)), float(r))
                   for r in rng.uniform(0, 2, size=50)]
        accs = [certified_accuracy(records, e) for e in np.linspace(0, 2.5, 20)]
        assert all(a >= b for a, b in zip(accs, accs[1:]))

    def test_empty_rejected(self):
        with pytest.raises(PreconditionError):
            certified_accuracy([], 0.1)

    def test_abstention_encoding(self):
        with pytest.raises(PreconditionError):
            RobustnessRecord(True, -0.5)


class TestAccuracyCurve:
    def test_single_record(self):
        records = [RobustnessRecord(True, 1.0)]
        curve = accuracy_curve_translate(records, 2.0, [0.5, 1.0, 1.5])
        assert curve == [(0.25, 1.0), (0.5, 1.0), (0.75, 0.0)]

    def test_kappa_one_is_identity(self):
        records = [RobustnessRecord(True, 0.7), RobustnessRecord(False, 0.2)]
        eps = [0.0, 0.5, 1.0]
        curve = accuracy_curve_translate(records, 1.0, eps)
        assert [e for e, _ in curve] == eps
        assert [a for _, a in curve] == [certified_accuracy(records, e)
                                         for e in eps]

    def test_smaller_kappa_dominates(self):
        # As functions of the translated radius eps', the kappa_1 < kappa_2
        # curves satisfy acc_{kappa_1}(eps') >= acc_{kappa_2}(eps').
        rng = np.random.default_rng(1)
        records = [RobustnessRecord(True, float(r))
                   for r in rng.uniform(0, 1, size=30)]
        k1, k2 = 2.0, 4.0
        for eps_inf in np.linspace(0.0, 0.5, 21):
            acc1 = certified_accuracy(records, eps_inf * k1)
            acc2 = certified_accuracy(records, eps_inf * k2)
            assert acc1 >= acc2

    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(PreconditionError):
            accuracy_curve_translate([RobustnessRecord(True, 1.0)], -1.0, [0.1])


class TestSubspaceNoise:
    def test_coordinate_projection_kills_complement(self):
        basis = np.zeros((6, 1))
        basis[0, 0] = 1.0
        proj = ProjectionMatrix(n=6, basis=basis)
        samples = subspace_noise_sample(proj, sigma=1.0, count=500, seed=0)
        assert np.abs(samples[:, 1:]).max() == 0.0
        assert samples[:, 0].std() > 0.5

    def test_mean_near_zero(self):
        rng = np.random.default_rng(2)
        q, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        proj = ProjectionMatrix(n=8, basis=q)
        samples = subspace_noise_sample(proj, sigma=1.0, count=20000, seed=3)
        se = 1.0 / math.sqrt(20000)
        assert np.abs(samples.mean(axis=0)).max() <= 5 * se

    def test_covariance_converges_to_projection(self):
        proj = ProjectionMatrix(n=8, basis=np.eye(8))
        samples = subspace_noise_sample(proj, sigma=1.0, count=100000, seed=4)
        cov = samples.T @ samples / samples.shape[0]
        assert np.abs(cov - np.eye(8)).max() <= 0.05


class TestEndToEndSoundness:
    def test_translated_radius_never_flips_linear_classifier(self):
        # For h(x) = sign(w^T Pi x) with l2 margin m, no linf perturbation
        # of norm < m / kappa may flip the sign when kappa is certified.
        rng = np.random.default_rng(6)
        n = 12
        q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
        pi = symmetrize(q @ q.T)
        cert, _ = certify_sdp(pi, CertifyParams(max_iters=4000))
        kappa = math.sqrt(cert.bound)
        w = rng.standard_normal(n)
        x = rng.standard_normal(n) * 2.0
        score = float(w @ pi @ x)
        margin = abs(score) / np.linalg.norm(pi @ w)
        budget = margin / kappa
        z = rng.uniform(-1.0, 1.0, size=(100000, n)) * budget * 0.999
        scores = (w @ pi) @ (x[:, None] + z.T)
        assert not (np.sign(scores) != np.sign(score)).any()

    def test_orthogonal_basis_preserves_l2_radius_computation(self):
        # Norm preservation is the testable core of basis invariance:
        # any l2 radius computed from norms is identical in the DCT basis.
        o = dct_basis(64)
        rng = np.random.default_rng(7)
        for _ in range(20):
            z = rng.standard_normal(64)
            assert abs(np.linalg.norm(o @ z) - np.linalg.norm(z)) <= 1e-10
