import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dispersive_torus.periodic import E2, I2, MatrixCoefficient, PeriodicScalar
from dispersive_torus.symbols import (GalerkinMatrix, NonRealInput, NotDiagonallyDominant, Symbol,
                                      TruncatedField, XiFactor, apply, compose, cutoff, cutoff_power,
                                      galerkin_matrix, multiplier, multiplier_symbol, neumann_inverse,
                                      operator_norm_estimate, poly, transition)

from helpers import rand_matrix, rand_scalar

seeds = st.integers(0, 2 ** 32 - 1)


def random_symbol(rng, K=3, r=3.0, with_cutoff=True):
    pairs = [(rand_matrix(rng, K), poly(m)) for m in range(int(rng.integers(1, 4)))]
    if with_cutoff:
        pairs.append((rand_matrix(rng, K), cutoff_power(int(rng.integers(1, 3)), r)))
    return Symbol.from_terms(pairs)


def random_field(rng, N, real=False):
    m = rng.normal(size=(2 * N + 1, 2)) + 1j * rng.normal(size=(2 * N + 1, 2))
    if real:
        m = 0.5 * (m + m[::-1].conj())
    return TruncatedField(m)


# cutoff ----------------------------------------------------------------------

def test_cutoff_examples():
    assert cutoff(2, 1.5) == 0.0
    assert cutoff(2, 4.0) == 1.0
    assert cutoff(2, -2.5) == cutoff(2, 2.5)


def test_cutoff_range_and_monotone():
    xi = np.linspace(-6, 6, 2001)
    v = cutoff(2, xi)
    assert np.all((v >= 0) & (v <= 1))
    pos = xi >= 0
    assert np.all(np.diff(v[pos]) >= -1e-15)
    assert np.all(v[np.abs(xi) <= 2] == 0) and np.all(v[np.abs(xi) >= 3] == 1)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cutoff_derivatives_match_finite_differences(d):
    xi = np.linspace(2.05, 2.95, 19)
    h = 1e-5
    fd = (cutoff(2, xi + h, d - 1) - cutoff(2, xi - h, d - 1)) / (2 * h)
    exact = cutoff(2, xi, d)
    assert np.max(np.abs(exact - fd)) <= 1e-5 * np.max(np.abs(exact))
    # odd derivatives are odd, even ones even
    assert np.allclose(cutoff(2, -xi, d), (-1) ** d * cutoff(2, xi, d))


def test_transition_symmetry():
    s = np.linspace(0, 1, 41)
    assert np.allclose(transition(s) + transition(1 - s), 1.0)


def test_xi_factor_orders():
    assert poly(3).order == 3
    assert cutoff_power(2, 5.0).order == -2
    assert cutoff_power(2, 5.0, 1).order == -math.inf
    with pytest.raises(ValueError):
        XiFactor(-1)


# apply -------------------------------------------------------------------------

def test_apply_examples():
    N = 4
    u = TruncatedField.basis(N, 1, 0)
    out = apply(Symbol.term(I2, poly(1)), u)
    assert np.allclose(out.modes, u.modes)

    u3 = TruncatedField.basis(N, 3, 0)
    out = apply(multiplier_symbol(1, 2.0), u3)
    assert out.modes[3 + N, 0] == pytest.approx(1 / 3j)
    assert np.count_nonzero(out.modes) == 1

    rng = np.random.default_rng(3)
    f = rand_scalar(rng, 2)
    v = TruncatedField.from_scalars(12, rand_scalar(rng, 3), rand_scalar(rng, 3))
    out = apply(Symbol.term(MatrixCoefficient.scalar_times(f, I2), poly(0)), v)
    x = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose(out.values(x), f(x)[:, None] * v.values(x), atol=1e-12)


def test_field_parseval():
    u = TruncatedField.from_scalars(8, PeriodicScalar.cos(2), PeriodicScalar.sin(1))
    n = 512
    x = 2 * np.pi * np.arange(n) / n
    quad = 2 * np.pi * np.mean(np.sum(np.abs(u.values(x)) ** 2, axis=1))
    assert u.norm() ** 2 == pytest.approx(quad)
    assert u.dim == 2 * 17


# multipliers -------------------------------------------------------------------

def test_multiplier_examples():
    N = 6
    v = TruncatedField.from_scalars(N, PeriodicScalar.cos(3))
    assert np.allclose(multiplier(1, 2, v).modes, TruncatedField.from_scalars(N, PeriodicScalar.sin(3, 1 / 3)).modes)
    assert np.allclose(multiplier(2, 2, v).modes, TruncatedField.from_scalars(N, PeriodicScalar.cos(3, -1 / 9)).modes)
    with pytest.raises(NonRealInput):
        multiplier(1, 2, TruncatedField.basis(N, 1, 0))


@given(seeds, st.sampled_from([1, 2, 3]), st.sampled_from([2.0, 8.0]))
def test_multiplier_preserves_reality(seed, l, r):
    v = random_field(np.random.default_rng(seed), 16, real=True)
    assert multiplier(l, r, v).imag_defect() <= 1e-12


def test_multiplier_matches_symbol():
    rng = np.random.default_rng(4)
    v = random_field(rng, 12, real=True)
    for l in (1, 2, 3):
        for im in (True, False):
            assert np.allclose(multiplier(l, 2.5, v, im).modes, apply(multiplier_symbol(l, 2.5, im), v).modes)


# composition -------------------------------------------------------------------

def test_compose_leibniz():
    f = rand_scalar(np.random.default_rng(5), 3)
    F = MatrixCoefficient.scalar_times(f, I2)
    s = compose(Symbol.term(I2, poly(1)), Symbol.term(F, poly(0)), order_cut=0)
    expected = Symbol.from_terms([(F, poly(1)), (F.derivative() * -1j, poly(0))])
    assert (s - expected).is_zero(1e-12)
    assert s.remainder_order is None


def test_compose_zero():
    p = random_symbol(np.random.default_rng(6))
    assert compose(p, Symbol.zero(), 0).is_zero()
    assert compose(Symbol.zero(), p, 0).is_zero()


def test_compose_commutator_with_principal_part():
    # q p - p q with q = (1/2) E A_off phi/xi reproduces the third-order removal terms
    rng = np.random.default_rng(7)
    Ao = rand_matrix(rng, 2).off()
    r = 4.0
    p = Symbol.term(E2, poly(4))
    q = Symbol.term(E2 @ Ao * 0.5, cutoff_power(1, r))
    comm = compose(q, p, 1) - compose(p, q, 1)
    # on |xi| >= r + 1 the cutoff is 1, so compare point values there
    xi = np.array([6.0, 9.5, -7.0])
    x = np.linspace(0, 2 * np.pi, 5)
    got = comm(x[:, None], xi[None, :])
    want = (-Ao(x)[:, None] * xi[None, :, None, None] ** 3
            + 2j * Ao.derivative()(x)[:, None] * xi[None, :, None, None] ** 2
            + 3 * Ao.derivative(2)(x)[:, None] * xi[None, :, None, None])
    assert np.allclose(got, want, atol=1e-10)


def test_compose_matches_galerkin_product_on_polynomials():
    rng = np.random.default_rng(8)
    p = random_symbol(rng, with_cutoff=False)
    q = random_symbol(rng, with_cutoff=False)
    N = 12
    lhs = galerkin_matrix(compose(p, q, -10), N).compress(N // 2)
    rhs = (galerkin_matrix(p, N) @ galerkin_matrix(q, N)).compress(N // 2)
    assert np.allclose(lhs.data, rhs.data, atol=1e-9)


def test_compose_remainder_growth_bounded():
    rng = np.random.default_rng(9)
    p = Symbol.from_terms([(rand_matrix(rng, 2), poly(2)), (rand_matrix(rng, 2), cutoff_power(1, 3.0))])
    q = Symbol.from_terms([(rand_matrix(rng, 2), poly(1)), (rand_matrix(rng, 2), cutoff_power(2, 3.0))])
    cut = 0
    res = []
    for N in (16, 32, 64):
        diff = galerkin_matrix(compose(p, q, cut), N) - galerkin_matrix(p, N) @ galerkin_matrix(q, N)
        res.append(diff.compress(N // 2).norm())
    # the discarded part has order below the cut: it may not grow like N^1
    assert res[2] / res[1] < 1.5 and res[1] / res[0] < 1.5


@given(seeds)
def test_compose_associative_mod_remainder(seed):
    rng = np.random.default_rng(seed)
    p, q, s = (Symbol.from_terms([(rand_matrix(rng, 2, amp=0.5), poly(1)),
                                  (rand_matrix(rng, 2, amp=0.5), poly(0))]) for _ in range(3))
    lhs = compose(compose(p, q, -4), s, -4)
    rhs = compose(p, compose(q, s, -4), -4)
    # polynomial inputs of degree <= 1: the expansion is exact
    assert (lhs - rhs).is_zero(1e-9)
    # regression bound on the Galerkin residual
    N = 16
    assert (galerkin_matrix(lhs, N) - galerkin_matrix(rhs, N)).norm() < 1e-8


# Galerkin ----------------------------------------------------------------------

def test_galerkin_examples():
    G = galerkin_matrix(Symbol.term(E2, poly(4)), 1)
    assert np.allclose(G.data, np.diag([1, -1, 0, 0, 1, -1]))
    S = galerkin_matrix(Symbol.term(MatrixCoefficient.scalar_times(PeriodicScalar.from_modes({1: 1}), I2), poly(0)), 2)
    for j in range(-2, 3):
        for k in range(-2, 3):
            expect = I2 if j == k + 1 else 0 * I2
            assert np.allclose(S.block(j, k), expect)


@given(seeds)
def test_galerkin_columns_match_apply(seed):
    rng = np.random.default_rng(seed)
    q = random_symbol(rng)
    N = 8
    G = galerkin_matrix(q, N)
    for k in range(-N, N + 1):
        for c in range(2):
            e = TruncatedField.basis(N, k, c)
            assert np.allclose((G @ e).modes, apply(q, e).modes, atol=1e-12)


def test_apply_preserves_real_subspace():
    rng = np.random.default_rng(10)
    # even real xi-parts, real coefficients
    q = Symbol.from_terms([(rand_matrix(rng, 2, real=True), poly(2)),
                           (rand_matrix(rng, 2, real=True), cutoff_power(2, 3.0))])
    assert apply(q, random_field(rng, 10, real=True)).is_real(1e-12)


def test_operator_norm_estimate_examples():
    assert operator_norm_estimate(Symbol.zero(), 8) == 0.0
    assert operator_norm_estimate(Symbol.identity(), 8) == pytest.approx(1.0)
    Ao = rand_matrix(np.random.default_rng(11), 2).off()
    q = lambda r: Symbol.term(E2 @ Ao * 0.5, cutoff_power(1, r))  # noqa: E731
    a, b = operator_norm_estimate(q(8), 64), operator_norm_estimate(q(16), 64)
    assert 0.25 <= b / a <= 1.0


def test_operator_norm_estimate_monotone_in_N():
    q = Symbol.from_terms([(rand_matrix(np.random.default_rng(12), 3), cutoff_power(1, 2.0)),
                           (rand_matrix(np.random.default_rng(13), 2), poly(0))])
    vals = [operator_norm_estimate(q, N) for N in (4, 8, 16, 32)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 10 * vals[0] + 10


def test_neumann_inverse_examples():
    N = 3
    eye = GalerkinMatrix.identity(N)
    assert np.allclose(neumann_inverse(eye * 0.0).data, eye.data)
    assert np.allclose(neumann_inverse(eye * 0.1).data, eye.data / 1.1)
    rng = np.random.default_rng(14)
    X = rng.normal(size=eye.data.shape) + 1j * rng.normal(size=eye.data.shape)
    L = GalerkinMatrix(N, 0.3 * X / np.linalg.norm(X, 2))
    inv = neumann_inverse(L)
    assert np.linalg.norm((eye + L).data @ inv.data - eye.data, 2) <= 1e-10
    with pytest.raises(NotDiagonallyDominant):
        neumann_inverse(eye * 0.6)


def test_galerkin_dump_roundtrip(tmp_path):
    G = galerkin_matrix(random_symbol(np.random.default_rng(15)), 3)
    path = tmp_path / "g.txt"
    G.dump(path)
    assert path.read_text().startswith("# galerkin N=3 rows=14 cols=14 layout=mode-major")
    assert np.array_equal(GalerkinMatrix.load(path).data, G.data)


def test_symbol_order_bound():
    q = random_symbol(np.random.default_rng(16))
    xi = np.linspace(-200, 200, 801)
    x = np.linspace(0, 2 * np.pi, 7)
    vals = np.linalg.norm(q(x[:, None], xi[None, :]), axis=(2, 3))
    ratio = vals / (1 + np.abs(xi[None, :])) ** q.order
    assert np.isfinite(ratio).all() and ratio.max() < 1e3
