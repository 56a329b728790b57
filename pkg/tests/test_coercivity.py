import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mooney_sla import (MaterialParams, SpectralState, build_A, certify, check_psd, roots_a_b,
                        spectral_of)
from mooney_sla.coercivity import CoercivityMatrix, alpha_bound, default_k, sylvester_minors
from mooney_sla.errors import (AlphaTooLargeError, BetaExceedsMaxError, HypothesesViolatedError,
                               InvalidStrainError, ParameterError)

NEO = MaterialParams(s1=1.0, s2=0.0, beta=10.0)


def entries(A):
    return [float(getattr(A, n)) for n in ("A11", "A22", "A12", "A33", "A44", "A34")]


def test_build_A_isotropic():
    s = SpectralState.from_eigenvalues(1.0, 1.0, 0.0, NEO)
    assert entries(build_A(s, 10.0, NEO)) == pytest.approx([12, 12, 11, 2, 2, 0])


def test_build_A_prestretched():
    s = SpectralState.from_eigenvalues(4.0, 0.25, -0.7, NEO)
    assert s.trB0 == pytest.approx(4.25) and s.trB0inv == pytest.approx(4.25)
    assert entries(build_A(s, 0.0, NEO)) == pytest.approx([8, 0.5, 2.825, 2.85, 5.65, -3.75])


def test_isotropic_B0_has_no_block2_coupling():
    p = MaterialParams(s1=2.0, s2=1.9, beta=1.0)
    s = SpectralState.from_eigenvalues(1.0, 1.0, 0.3, p)
    assert build_A(s, 5.0, p).A34 == 0.0


def test_block2_independent_of_beta(rng):
    p = MaterialParams(s1=1.2, s2=-0.5, beta=1.0)
    s = SpectralState.from_eigenvalues(3.0, 0.4, 0.2, p)
    a, b = build_A(s, 0.0, p), build_A(s, rng.uniform(1, 1e4), p)
    assert (a.A33, a.A44, a.A34) == (b.A33, b.A44, b.A34)


def test_to_array_block_structure():
    s = SpectralState.from_eigenvalues(4.0, 0.25, -0.7, NEO)
    M = build_A(s, 3.0, NEO).to_array()
    assert np.allclose(M, M.T)
    assert np.all(M[:2, 2:] == 0) and np.all(M[2:, :2] == 0)


def test_check_psd_examples():
    A = build_A(SpectralState.from_eigenvalues(1.0, 1.0, 0.0, NEO), 10.0, NEO)
    q = sylvester_minors(A, 0.5)
    assert q[1] == pytest.approx(11.25) and q[3] == pytest.approx(2.25)
    assert check_psd(A, 0.5) is True
    assert check_psd(A, 1.1) is False
    zero = CoercivityMatrix(*(0.0,) * 6)
    assert check_psd(zero, 0.0) is True


def test_check_psd_tie_needs_second_diagonal():
    # A11 - alpha = 0 and det = 0, but A22 - alpha < 0: not PSD
    A = CoercivityMatrix(A11=1.0, A22=0.0, A12=0.0, A33=2.0, A44=2.0, A34=0.0)
    assert check_psd(A, 1.0) is False


def test_check_psd_vectorized():
    s = SpectralState.from_eigenvalues(np.array([1.0, 1.0]), np.array([1.0, 1.0]),
                                       np.array([0.0, 3.0]), NEO)
    assert check_psd(build_A(s, 10.0, NEO), 0.5).tolist() == [True, False]


@pytest.mark.parametrize("p,g,expected", [
    (NEO, (1.0, 1.0), dict(a0=-2, b0=2, a_alpha=-2, b_alpha=2, a_star=-2, b_star=2)),
    (MaterialParams(s1=1.0, s2=-1.0, beta=1.0), (1.0, 1.0), dict(a0=0, b0=8)),
    (NEO, (4.0, 0.25), dict(a0=-2, b0=2)),
])
def test_roots(p, g, expected):
    r = roots_a_b(SpectralState.from_eigenvalues(*g, 0.0, p), 0.0, p)
    for name, val in expected.items():
        assert getattr(r, name) == pytest.approx(val), name


def test_roots_alpha_too_large():
    # discriminant 1 - 2.125 alpha + alpha^2 / 4 < 0 at alpha = 1
    s = SpectralState.from_eigenvalues(4.0, 0.25, 0.0, NEO)
    with pytest.raises(AlphaTooLargeError):
        roots_a_b(s, 1.0, NEO)


@settings(max_examples=80, deadline=None)
@given(g1=st.floats(0.1, 10), g2=st.floats(0.1, 10), s1=st.floats(0.05, 5),
       frac=st.floats(0.0, 0.999), neg=st.booleans(), t=st.floats(0.0, 0.999))
def test_roots_ordering_and_gap_nonempty(g1, g2, s1, frac, neg, t):
    s2 = -t * 5 if neg else t * s1
    p = MaterialParams(s1=s1, s2=s2, beta=1.0)
    k = default_k(p)
    if g1 * g2 < k:
        return
    s = SpectralState.from_eigenvalues(g1, g2, 0.0, p)
    D = s.trB0 / math.sqrt(s.detB0)
    alpha = frac * alpha_bound(p, k) / D
    r = roots_a_b(s, alpha, p)
    tol = 1e-9 * (abs(r.b0) + abs(r.a0) + 1)
    assert r.b_alpha >= r.b0 - alpha * D - tol
    assert r.a_alpha <= r.a0 + alpha * D + tol
    assert r.b0 - r.a0 - 2 * alpha * D > -tol


def test_spectral_of_examples():
    s = spectral_of(np.eye(2), 0.0, NEO)
    assert (s.gamma1, s.gamma2) == (1.0, 1.0)
    s = spectral_of(np.diag([4.0, 0.25]), 0.0, NEO)
    assert (s.gamma1, s.gamma2) == (4.0, 0.25)
    s = spectral_of(np.array([[1.25, 0.5], [0.5, 1.0]]), 0.0, NEO)
    disc = math.sqrt(2.25 ** 2 - 4)
    assert s.gamma1 == pytest.approx((2.25 + disc) / 2, rel=1e-14)
    assert s.gamma2 == pytest.approx((2.25 - disc) / 2, rel=1e-14)
    assert s.detB0 == pytest.approx(1.0, rel=1e-15)
    assert s.trB0inv == pytest.approx(s.trB0 / s.detB0, rel=1e-12)


@pytest.mark.parametrize("B0", [np.array([[1.0, 0.5], [0.2, 1.0]]), -np.eye(2),
                                np.array([[1.0, 2.0], [2.0, 1.0]])])
def test_spectral_of_rejects_bad_strain(B0):
    with pytest.raises(InvalidStrainError):
        spectral_of(B0, 0.0, NEO)


def test_certify_isotropic_beta0_zero():
    s = SpectralState.from_eigenvalues(1.0, 1.0, 0.0, NEO)
    rep = certify([s], alpha=0.5, k=1.0, params=NEO)
    assert rep.admissible and rep.beta0 == 0.0
    assert rep.epsilon == 1.0 and rep.dbar == 2.0


def test_certify_hand_case():
    s = SpectralState.from_eigenvalues(4.0, 0.25, -0.7, NEO)
    rep = certify([s], alpha=0.1, k=0.5, params=NEO)
    assert rep.admissible
    assert rep.beta0 == pytest.approx(4.820625 / 2.65, abs=1e-6)
    assert check_psd(build_A(s, rep.beta0, NEO), 0.1)


def test_certify_gap_violation_names_condition():
    s = SpectralState.from_eigenvalues(1.0, 1.0, 3.0, NEO)
    with pytest.raises(HypothesesViolatedError) as info:
        certify([s], alpha=0.1, k=1.0, params=NEO)
    rep = info.value.report
    assert not rep.admissible
    assert {v["condition"] for v in rep.violations} == {"pressure_gap"}
    assert build_A(s, 1e6, NEO).A44 == pytest.approx(-4.0)


def test_certify_reports_without_raising():
    s = SpectralState.from_eigenvalues(1.0, 1.0, 3.0, NEO)
    rep = certify([s], alpha=0.1, k=1.0, params=NEO, raise_on_failure=False)
    assert not rep.admissible
    json.dumps(rep.to_dict())


def test_certify_det_and_alpha_violations():
    s = SpectralState.from_eigenvalues(1.0, 0.2, 0.0, NEO)
    rep = certify([s], alpha=5.0, k=0.5, params=NEO, raise_on_failure=False)
    names = {v["condition"] for v in rep.violations}
    assert {"det_lower_bound", "alpha_bound"} <= names


def test_certify_beta_max_too_small():
    s = SpectralState.from_eigenvalues(4.0, 0.25, -0.7, NEO)
    with pytest.raises(BetaExceedsMaxError):
        certify([s], alpha=0.1, k=0.5, beta_max=1.0, params=NEO)


def test_certify_parameter_checks():
    s = SpectralState.from_eigenvalues(1.0, 1.0, 0.0, NEO)
    p = MaterialParams(s1=1.0, s2=0.5, beta=1.0)
    with pytest.raises(ParameterError):
        certify([s], k=0.4, params=p)
    with pytest.raises(ParameterError):
        certify([s], alpha=-1.0, params=NEO)
    with pytest.raises(ParameterError):
        certify([s], params=None)


def test_default_k_and_auto_alpha():
    assert default_k(NEO) == 1e-3
    p = MaterialParams(s1=1.0, s2=0.5, beta=1.0)
    assert default_k(p) == pytest.approx(0.505)
    s = SpectralState.from_eigenvalues(1.0, 1.0, 0.0, p)
    rep = certify([s], params=p, raise_on_failure=False)
    assert rep.alpha == pytest.approx(0.9 * rep.alpha_max)


def test_beta0_is_minimal_to_tolerance():
    s = SpectralState.from_eigenvalues(4.0, 0.25, -0.7, NEO)
    rep = certify([s], alpha=0.1, k=0.5, params=NEO)
    assert not check_psd(build_A(s, rep.beta0 - 1e-6, NEO), 0.1)
