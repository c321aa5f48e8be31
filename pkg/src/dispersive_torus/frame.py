"""Frame-coefficient systems of fourth-order curve flows into a Riemann surface.

Writing ``u_x = xi e + eta Je`` in a parallel orthonormal frame along the
curve, the l-th covariant derivative of ``u_x`` satisfies, up to bounded
terms, the real system

    Z_t - a J Z_xxxx + beta_hat Z_xx + gamma_hat Z_x = OK.

The frame closes up only after a rotation ``P(theta x)`` by the holonomy
angle, which adds constant-coefficient terms.  This module builds the
coefficients, the rotated ("corrected") ones, and the resulting verdict.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .periodic import (DEFAULT_TOL, I2, J2, MatrixCoefficient, PeriodicScalar, as_scalar,
                       rotation)
from .wellposed import (RealSystem, Verdict, VERDICT_TOL, check_real,
                        check_real_time_dependent)

Curvature = Union[float, PeriodicScalar]

#: extra modes kept when a non-periodic rotation is refit onto a series
FIT_PAD = 16


@dataclass(frozen=True)
class FrameState:
    """Frame components ``xi, eta`` of ``u_x``, curvature ``K`` and flow constants."""

    xi: PeriodicScalar
    eta: PeriodicScalar
    K: Curvature = 1.0
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    l: int = 4

    def __post_init__(self):
        object.__setattr__(self, "xi", as_scalar(self.xi))
        object.__setattr__(self, "eta", as_scalar(self.eta))
        if isinstance(self.K, PeriodicScalar):
            if not self.K.is_real():
                raise ValueError("curvature K must be real-valued")
        else:
            object.__setattr__(self, "K", float(self.K))
        if not (self.xi.is_real() and self.eta.is_real()):
            raise ValueError("xi and eta must be real-valued")
        if int(self.l) != self.l or self.l < 4:
            raise ValueError("l must be an integer >= 4")
        if not self.a or not math.isfinite(self.a):
            raise ValueError("a must be a nonzero real number")

    @property
    def curvature(self) -> PeriodicScalar:
        return self.K if isinstance(self.K, PeriodicScalar) else PeriodicScalar.constant(self.K)

    @property
    def constant_curvature(self) -> bool:
        return not isinstance(self.K, PeriodicScalar) or self.K.trim(DEFAULT_TOL).K == 0

    @property
    def speed_squared(self) -> PeriodicScalar:
        """``g(u_x, u_x) = xi^2 + eta^2``."""
        return self.xi * self.xi + self.eta * self.eta

    def H(self) -> PeriodicScalar:
        """Potential of the divergence part of ``gamma12 - gamma21``.

        Summing the displayed entries gives ``b(2l+4)`` for the ``b`` weight.
        """
        l = self.l
        return self.curvature * (self.a / 2 * (2 * l - 1)) + (self.b * (2 * l + 4) + self.c / 2 * (2 * l + 5))

    def to_dict(self) -> dict:
        K = self.K.to_triples() if isinstance(self.K, PeriodicScalar) else self.K
        return {"xi": self.xi.to_triples(), "eta": self.eta.to_triples(), "K": K,
                "a": self.a, "b": self.b, "c": self.c, "l": self.l}

    @classmethod
    def from_dict(cls, d: dict) -> "FrameState":
        K = d.get("K", 1.0)
        if isinstance(K, (list, tuple)):
            K = PeriodicScalar.from_triples(K)
        return cls(PeriodicScalar.from_triples(d["xi"]), PeriodicScalar.from_triples(d["eta"]), K,
                   float(d.get("a", 1.0)), float(d.get("b", 0.0)), float(d.get("c", 0.0)), int(d.get("l", 4)))


@dataclass(frozen=True)
class FrameCoefficients:
    beta_hat: MatrixCoefficient
    gamma_hat: MatrixCoefficient


def frame_coefficients(state: FrameState) -> FrameCoefficients:
    xi, eta, K = state.xi, state.eta, state.curvature
    a, b, c, l = state.a, state.b, state.c, state.l
    xe = xi * eta
    kap = K * a + c                       # aK + c
    w = K * (a / 2 * (2 * l - 1)) + (b + c) * (l + 2)
    s = b * (l + 2) + c / 2
    Kx = K.derivative()
    one = PeriodicScalar.constant(1.0)

    b11 = kap * xe
    b12 = one + xi * xi * b + (K * a + (b + c)) * eta * eta
    b21 = -one - (K * a + (b + c)) * xi * xi - eta * eta * b
    b22 = -kap * xe

    g_diag = ((K * (a * (l - 1)) + c * (l + 2)) * xe).derivative()
    m = K * a + (2 * b - c)               # aK + 2b - c
    g11 = g_diag + m * xi * eta.derivative()
    g12 = (xi * xi * s + w * eta * eta).derivative() - Kx * eta * eta * (a / 2)
    g21 = -(w * xi * xi + eta * eta * s).derivative() + Kx * xi * xi * (a / 2)
    g22 = -g_diag - m * xi.derivative() * eta

    return FrameCoefficients(MatrixCoefficient.from_entries([[b11, b12], [b21, b22]]),
                             MatrixCoefficient.from_entries([[g11, g12], [g21, g22]]))


# ---------------------------------------------------------------------------
# holonomy correction

@dataclass(frozen=True)
class HolonomyCorrection:
    theta: float
    beta_hat1: MatrixCoefficient
    gamma_hat1: MatrixCoefficient
    third_order_coeff: float
    exact: bool = True


def split_rotation_parts(X: MatrixCoefficient) -> tuple[MatrixCoefficient, PeriodicScalar]:
    """``X = X_inv + X_rot``.

    ``X_inv = (tr X / 2) I - (tr(JX) / 2) J`` commutes with rotations; the
    rest has the form ``[[p, q], [q, -p]]`` and is returned as ``w = p + iq``.
    """
    tr = X.trace()
    trJ = (J2 @ X).trace()
    X_inv = MatrixCoefficient.scalar_times(tr * 0.5, I2) - MatrixCoefficient.scalar_times(trJ * 0.5, J2)
    R = X - X_inv
    return X_inv, R[0, 0] + 1j * R[0, 1]


def _from_w(w_re: PeriodicScalar, w_im: PeriodicScalar) -> MatrixCoefficient:
    return MatrixCoefficient.from_entries([[w_re, w_im], [w_im, -w_re]])


def rotate_coefficient(X: MatrixCoefficient, theta: float, fit_bandwidth: int | None = None
                       ) -> tuple[MatrixCoefficient, bool]:
    """``P(theta x) X(x) P(theta x)^T`` and whether it is exact.

    The rotating part turns by ``2 theta x``; when ``2 theta`` is an integer
    this is an exact mode shift, otherwise the (non-periodic) product is
    sampled and refit, which is only approximate.
    """
    X_inv, w = split_rotation_parts(X)
    m2 = 2.0 * theta
    if abs(m2 - round(m2)) < 1e-12:
        m = int(round(m2))
        # w is complex valued even for real X; carry w and conj(w) separately
        wr = w.modulate(m)                               # exp(imx) (p + iq)
        wc = w.conj().modulate(-m)                       # exp(-imx) (p - iq)
        p = (wr + wc) * 0.5
        q = (wr - wc) * (-0.5j)
        return X_inv + _from_w(p, q), True
    bw = fit_bandwidth if fit_bandwidth is not None else X.K + int(math.ceil(abs(m2))) + FIT_PAD
    npts = 2 * bw + 1
    x = 2 * math.pi * np.arange(npts) / npts
    vals = w(x) * np.exp(1j * m2 * x)
    p = PeriodicScalar.from_samples(vals.real, bw)
    q = PeriodicScalar.from_samples(vals.imag, bw)
    return X_inv + _from_w(p, q), False


def holonomy_correct(fc: FrameCoefficients, theta: float, a: float,
                     fit_bandwidth: int | None = None) -> HolonomyCorrection:
    """Coefficients of the system for ``Z = P(theta x) (V, W)``.

    ``third_order_coeff`` is the coefficient of ``I d^3``: conjugating
    ``-aJ d^4`` by the rotation gives ``-aJ (d - theta J)^4``, whose cubic
    term is ``-4 a theta I d^3``.
    """
    theta = float(theta)
    Pb, ex1 = rotate_coefficient(fc.beta_hat, theta, fit_bandwidth)
    Pg, ex2 = rotate_coefficient(fc.gamma_hat, theta, fit_bandwidth)
    beta1 = Pb + MatrixCoefficient.constant(6 * a * theta ** 2 * J2)
    gamma1 = Pg + MatrixCoefficient.constant(4 * a * theta ** 3 * I2) - (Pb @ J2) * (2 * theta)
    return HolonomyCorrection(theta, beta1, gamma1, -4.0 * a * theta, ex1 and ex2)


def corrected_system(state: FrameState, theta: float = 0.0) -> tuple[RealSystem, HolonomyCorrection]:
    """Real system (principal scale ``-a``) of the corrected frame equation,
    without its constant isotropic third-order term."""
    hc = holonomy_correct(frame_coefficients(state), theta, state.a)
    return RealSystem(hc.beta_hat1, hc.gamma_hat1, -state.a), hc


def frame_wellposedness(state: FrameState | Sequence[FrameState], theta: float | Sequence[float] = 0.0,
                        times: Sequence[float] | None = None,
                        tolerance: float = VERDICT_TOL) -> Verdict:
    """Trace-condition verdict for the corrected frame system.

    The constant term ``c3 I d^3`` is left out: it acts on mode ``k`` as the
    unimodular factor ``exp(-i c3 k^3 t)`` and commutes with every
    constant-coefficient part, so it cannot change L^2 norms.  A sequence of
    states (with matching ``times``) is checked sample by sample.
    """
    if isinstance(state, FrameState):
        sys, _ = corrected_system(state, float(theta))
        return check_real(sys, tolerance)
    states = list(state)
    thetas = list(theta) if isinstance(theta, (list, tuple, np.ndarray)) else [float(theta)] * len(states)
    times = list(times) if times is not None else list(range(len(states)))
    systems = [corrected_system(s, th)[0] for s, th in zip(states, thetas)]
    return check_real_time_dependent(systems, times, tolerance)


def trace_identity_residuals(state: FrameState, theta: float = 0.0) -> dict:
    """Max mode moduli of the frame identities (all zero in exact arithmetic)."""
    fc = frame_coefficients(state)
    hc = holonomy_correct(fc, theta, state.a)
    g = fc.gamma_hat
    div = g[0, 1] - g[1, 0] - (state.H() * state.speed_squared).derivative() \
        + state.curvature.derivative() * state.speed_squared * (state.a / 2)
    integral = (g[0, 1] - g[1, 0]).mean_integral()
    closed = (state.curvature.derivative() * state.speed_squared).mean_integral() * (-state.a / 2)

    def mx(f: PeriodicScalar) -> float:
        return float(np.max(np.abs(f.coeffs)))

    return {
        "trace_beta_hat": mx(fc.beta_hat.trace()),
        "divergence_identity": mx(div),
        "integral_identity": abs(integral - closed),
        "holonomy_trace_beta": mx(hc.beta_hat1.trace() - fc.beta_hat.trace()),
        "holonomy_trace_J_gamma": mx((J2 @ hc.gamma_hat1).trace() - (J2 @ g).trace()),
    }


def rotation_matrix(theta: float, x) -> np.ndarray:
    """``P(theta x)`` at the points ``x`` (shape ``x.shape + (2, 2)``)."""
    x = np.asarray(x, dtype=float)
    return np.stack([rotation(theta * xx) for xx in x.ravel()]).reshape(x.shape + (2, 2))
