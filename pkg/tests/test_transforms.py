import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispersive_torus.periodic import E2, I2, J2, MatrixCoefficient, PeriodicScalar
from dispersive_torus.symbols import (NotDiagonallyDominant, Symbol, TruncatedField, apply, compose,
                                      cutoff_power, galerkin_matrix, poly)
from dispersive_torus.transforms import (ConditionsViolated, choose_radius, compute_B1, compute_C1,
                                         compute_C2, diagonalize, gamma4_terms, gauge_matrices,
                                         principal_symbol, real_gauge, verify_diagonalization,
                                         verify_energy_estimate)
from dispersive_torus.wellposed import ComplexSystem, RealSystem, check_complex, check_single

from helpers import random_complex_system, random_compliant_real, rand_matrix
from test_wellposed import ILL_POSED

seeds = st.integers(0, 2 ** 32 - 1)
XI = np.array([[10.0, 17.0, -23.0, 40.0]])
X = np.linspace(0, 2 * np.pi, 7)[:, None]


def C(m):
    return MatrixCoefficient.constant(np.asarray(m, dtype=complex))


def conjugate_symbol(lam: Symbol, p: Symbol) -> Symbol:
    """Symbol of ``Op(lam) Op(p) Op(lam)^{-1}`` keeping orders >= 1 (geometric inverse)."""
    one = Symbol.identity()
    t = lam - one
    inv, term = one - t, t
    for j in range(3):
        term = compose(term, t, -3)
        inv = inv + term * (-1) ** j
    return compose(compose(lam, p, 1), inv, 1)


# coefficient formulas --------------------------------------------------------

def test_B1_examples():
    rng = np.random.default_rng(0)
    B = rand_matrix(rng, 2)
    assert compute_B1(0, B).allclose(B)
    A = C([[0, 1], [1, 0]])
    B1 = compute_B1(A, 0)
    a = np.array([[0, 1], [1, 0]], dtype=complex)
    oracle = 0.5 * a @ E2 @ a - a @ E2 @ a
    assert np.allclose(B1.mode(0), oracle)
    assert B1[0, 0].allclose(0.5) and B1[1, 1].allclose(-0.5)
    A = MatrixCoefficient.from_entries([[0, PeriodicScalar.from_modes({1: 1})], [0, 0]])
    assert compute_B1(A, 0)[0, 1].allclose(PeriodicScalar.from_modes({1: -2}))


def test_C_examples():
    rng = np.random.default_rng(1)
    B, Cm = rand_matrix(rng, 2), rand_matrix(rng, 2)
    C1 = compute_C1(0, B, Cm)
    assert C1.allclose(Cm)
    assert compute_C2(0, B, C1).allclose(Cm + 2j * B.off().derivative())
    assert compute_C1(0, 0, 0).is_zero() and compute_C2(0, 0, 0).is_zero()


def test_constant_matrix_oracle():
    rng = np.random.default_rng(2)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    ao = a - np.diag(np.diag(a))
    E = E2
    c1 = (c + 0.25 * (a @ E @ ao @ E @ ao) + 0.25 * (ao @ E @ a @ E @ ao) - 0.25 * (ao @ E @ ao @ E @ ao)
          - 0.5 * (b @ E @ ao) - 0.5 * (ao @ E @ b))
    b1 = b + 0.5 * ao @ E @ ao - 0.5 * a @ E @ ao - 0.5 * ao @ E @ a
    b1o = b1 - np.diag(np.diag(b1))
    ad = np.diag(np.diag(a))
    c2 = c1 - 0.5 * ad @ E @ b1o - 0.5 * b1o @ E @ ad
    assert np.allclose(compute_B1(C(a), C(b)).mode(0), b1)
    assert np.allclose(compute_C1(C(a), C(b), C(c)).mode(0), c1)
    assert np.allclose(compute_C2(C(a), C(b1), C(c1)).mode(0), c2)


@settings(max_examples=20)
@given(seeds)
def test_conjugation_steps_by_symbol_calculus(seed):
    # independent route: compose Lambda P Lambda^{-1} and read the orders >= 1 at |xi| >= r + 1
    s = random_complex_system(np.random.default_rng(seed), K=2, amp=0.5)
    r = 3.0
    B1 = compute_B1(s.A, s.B)
    C1 = compute_C1(s.A, s.B, s.C)
    C2 = compute_C2(s.A, B1, C1)
    P1 = Symbol.from_terms([(E2, poly(4)), (s.A.diag(), poly(3)), (B1, poly(2)), (C1, poly(1))])
    P2 = Symbol.from_terms([(E2, poly(4)), (s.A.diag(), poly(3)), (B1.diag(), poly(2)), (C2, poly(1))])
    P3 = Symbol.from_terms([(E2, poly(4)), (s.A.diag(), poly(3)), (B1.diag(), poly(2)), (C2.diag(), poly(1))])
    one = Symbol.identity()
    steps = [(principal_symbol(s), E2 @ s.A.off(), 1, P1), (P1, E2 @ B1.off(), 2, P2), (P2, E2 @ C2.off(), 3, P3)]
    for P, c, l, expected in steps:
        got = conjugate_symbol(one + Symbol.term(c * 0.5, cutoff_power(l, r)), P)
        scale = np.abs(P(X, XI)).max()
        assert np.abs((got - expected)(X, XI)).max() <= 1e-12 * scale


# diagonalize -------------------------------------------------------------------

def test_diagonalize_zero():
    res = diagonalize(ComplexSystem())
    for lam in (res.lambda1, res.lambda2, res.lambda3):
        assert (lam - Symbol.identity()).is_zero()
    for row in (res.row1, res.row2):
        assert row.a.is_zero() and row.b.is_zero() and row.c.is_zero()
    chk = verify_diagonalization(ComplexSystem(), res, 16)
    assert chk.offdiag_norm == 0 and chk.diag_norm == 0


def test_diagonalize_constant_offdiagonal():
    res = diagonalize(ComplexSystem(C([[0, 1], [1, 0]])))
    assert res.row1.b.allclose(0.5) and res.row2.b.allclose(-0.5)
    assert res.row1.c.is_zero() and res.row2.c.is_zero()
    assert res.row1.sign == 1 and res.row2.sign == -1
    assert res.report()["row1"]["b"] == [[0, 0.5, 0.0]]


def test_diagonalize_rows_reproduce_ill_posed_residuals():
    res = diagonalize(ILL_POSED, r=8)
    full = check_complex(ILL_POSED).residual_values
    rows = np.concatenate([check_single(res.row1).residual_values, check_single(res.row2).residual_values])
    # the rows' single-equation conditions are conditions (1, 3, 5) and (2, 4, 6)
    assert np.allclose(rows, full[[0, 2, 4, 1, 3, 5]], atol=1e-12)
    assert rows[2] == pytest.approx(-math.pi) and rows[5] == pytest.approx(-math.pi)


@given(seeds)
def test_row_reconstruction_identity(seed):
    s = random_complex_system(np.random.default_rng(seed), K=2, amp=0.5)
    res = diagonalize(s, r=8)
    A, B, Cm = s.A, s.B, s.C
    a11, a12, a21, a22 = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    b12, b21 = B[0, 1], B[1, 0]
    p = a12 * a21
    assert res.row1.b.allclose(B[0, 0] + p / 2)
    assert res.row2.b.allclose(B[1, 1] - p / 2)
    c11 = Cm[0, 0] + 0.5j * p.derivative() + 0.5j * a12.derivative() * a21 - 0.25 * p * (a11 - a22) \
        + 0.5 * (a12 * b21 + a21 * b12)
    # the second row carries -(i/2) a12 a21', matching condition 6
    c22 = Cm[1, 1] - 0.5j * p.derivative() - 0.5j * a12 * a21.derivative() + 0.25 * p * (a11 - a22) \
        - 0.5 * (a12 * b21 + a21 * b12)
    assert res.row1.c.allclose(c11, atol=1e-11)
    assert res.row2.c.allclose(c22, atol=1e-11)


@given(seeds)
def test_row_residuals_match_complex_residuals(seed):
    s = random_complex_system(np.random.default_rng(seed), K=2, amp=0.5)
    res = diagonalize(s, r=8)
    rows = np.concatenate([check_single(res.row1).residual_values, check_single(res.row2).residual_values])
    assert np.allclose(rows, check_complex(s).residual_values[[0, 2, 4, 1, 3, 5]], atol=1e-10)


def test_verify_diagonalization_ratios():
    s = random_complex_system(np.random.default_rng(4), K=2, amp=0.3)
    res = diagonalize(s)
    chk = verify_diagonalization(s, res, 64)
    assert chk.offdiag_ratio <= 1.5
    assert 6 <= chk.raw_ratio <= 10
    assert chk.report()["N"] == 64


def test_choose_radius_certificate():
    from dispersive_torus.symbols import operator_norm_estimate
    c = rand_matrix(np.random.default_rng(5), 2, amp=3.0).off()
    r0 = max(8, math.ceil(4 * c.sup_bound()))
    r = choose_radius([(c, 1, False)])
    assert r >= r0
    assert operator_norm_estimate(Symbol.term(c, cutoff_power(1, r)), 2 * r) < 0.5
    # large radii switch to the analytic bound sup|c| / r
    big = c * 20.0
    r = choose_radius([(big, 1, False)])
    assert r >= 4 * big.sup_bound() and big.sup_bound() / r < 0.5
    with pytest.raises(NotDiagonallyDominant):
        choose_radius([(C([[0, 1e9], [1e9, 0]]), 1, False)], r_cap=64)


# real gauge --------------------------------------------------------------------

def test_gauge_zero():
    res = real_gauge(RealSystem())
    assert res.Psi4.is_zero() and res.Psi6.is_zero() and res.mu.is_zero()
    assert res.beta4.is_zero() and res.gamma5_sym.is_zero()
    assert verify_energy_estimate(res, 16) == pytest.approx(0, abs=1e-10)


def test_gauge_constant_symmetric_beta():
    beta = C([[0, 1], [1, 0]])
    res = real_gauge(RealSystem(beta=beta))
    assert res.Psi4.is_zero()
    assert res.beta4.allclose(beta)
    assert res.gamma4.is_zero()


def test_gauge_violations():
    with pytest.raises(ConditionsViolated) as info:
        real_gauge(RealSystem(beta=C(I2)))
    assert info.value.condition == 1
    with pytest.raises(ConditionsViolated) as info:
        real_gauge(RealSystem(gamma=C(J2)))
    assert info.value.condition == 2


def test_gamma4_terms_pinned():
    # regression pin of each summand on a fixed input
    beta = MatrixCoefficient.from_entries([[PeriodicScalar.cos(), PeriodicScalar.sin(2)],
                                           [PeriodicScalar.constant(0.5), -PeriodicScalar.cos()]])
    beta = beta + MatrixCoefficient.scalar_times(PeriodicScalar.sin(), I2)
    gamma = MatrixCoefficient.scalar_times(PeriodicScalar.cos(3), J2)
    Psi4 = beta.trace().primitive()
    t = gamma4_terms(beta, gamma, Psi4)
    # tr(beta) = 2 sin x, Psi4 = 2 - 2 cos x
    assert Psi4.allclose(2 - 2 * PeriodicScalar.cos())
    assert t["gamma"].allclose(gamma)
    assert t["psi4_second"].allclose(MatrixCoefficient.scalar_times(PeriodicScalar.cos(1, -1.5), I2))
    sq = (Psi4 * Psi4).derivative()
    assert t["psi4_square"].allclose(MatrixCoefficient.scalar_times(sq * (-1 / 32), J2))
    comm = (beta @ J2 - J2 @ beta) * (Psi4 / 8)
    assert t["psi4_commutator"].allclose(comm)
    x = np.linspace(0, 2 * np.pi, 5)
    b = beta(x)
    assert np.allclose(t["psi4_commutator"](x), (b @ J2 - J2 @ b) * (Psi4(x) / 8)[:, None, None])


@given(seeds)
def test_gauge_identities(seed):
    s = random_compliant_real(np.random.default_rng(seed), K=2, amp=0.5)
    res = real_gauge(s, r=8)
    trJb = (J2 @ s.beta).trace()
    # beta4 - beta4^T = -tr(J beta) J
    assert (res.beta4 - res.beta4.T).allclose(MatrixCoefficient.scalar_times(trJb, J2) * -1)
    assert res.beta4.trace().is_zero(1e-12)
    assert res.Psi6.derivative().allclose(res.mu, atol=1e-11)
    assert res.gamma5_sym.allclose(res.gamma5_sym.T)


@settings(max_examples=10)
@given(seeds)
def test_gauge_by_symbol_calculus(seed):
    # Lambda6 Lambda5 Lambda4 L (...)^{-1} equals the model operator in orders >= 1
    s = random_compliant_real(np.random.default_rng(seed), K=2, amp=0.4)
    res = real_gauge(s, r=3)
    L = Symbol.from_terms([(J2, poly(4)), (s.beta * -1, poly(2)), (s.gamma * 1j, poly(1))])
    for lam in res.gauge_symbols():
        L = conjugate_symbol(lam, L)
    diff = (L - res.model_symbol())(X, XI)
    assert np.abs(diff).max() <= 1e-12 * np.abs(res.model_symbol()(X, XI)).max()


def test_gauge_reality():
    rng = np.random.default_rng(6)
    s = random_compliant_real(rng)
    res = real_gauge(s)
    N = 24
    for lam in res.gauge_symbols():
        G = galerkin_matrix(lam, N)
        for _ in range(5):
            m = rng.normal(size=(2 * N + 1, 2)) + 1j * rng.normal(size=(2 * N + 1, 2))
            v = TruncatedField(0.5 * (m + m[::-1].conj()))
            assert (G @ v).imag_defect() <= 1e-10
            assert apply(lam, v).imag_defect() <= 1e-10
    Lam, Lam_inv = gauge_matrices(res, N)
    assert np.allclose(Lam.data @ Lam_inv.data, np.eye(Lam.data.shape[0]), atol=1e-12)


def test_energy_estimate_dichotomy():
    s = random_compliant_real(np.random.default_rng(7))
    res = real_gauge(s)
    vals = [verify_energy_estimate(res, N) for N in (16, 32, 64)]
    assert max(vals) <= 1.2 * min(vals)
    bad = real_gauge(RealSystem(beta=C(I2)), strict=False)
    vb = [verify_energy_estimate(bad, N) for N in (16, 32, 64)]
    assert vb[2] >= 10 * vb[0]
    assert vb[1] / vb[0] >= 3.5   # at least linear in N^2


def test_energy_estimate_detects_wrong_gauge():
    # corrupting Psi6 leaves a growing non-skew first-order part in the high band
    from dataclasses import replace
    s = random_compliant_real(np.random.default_rng(8), amp=0.5)
    res = real_gauge(s)
    good = [verify_energy_estimate(res, N, high_band=True) for N in (16, 32, 64)]
    wrong = replace(res, lambda6=Symbol.identity() + Symbol.term(
        MatrixCoefficient.scalar_times(res.Psi6, I2) * -0.25, cutoff_power(2, res.r), -1.0))
    bad = [verify_energy_estimate(wrong, N, high_band=True) for N in (16, 32, 64)]
    assert max(good) <= 1.5 * min(good)
    assert bad[2] > 1.5 * bad[1]
