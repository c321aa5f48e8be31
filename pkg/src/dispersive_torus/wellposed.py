"""Integral conditions for L^2 well-posedness of fourth-order systems on the torus.

Three families are covered:

* single equations ``v_t +- i D^4 v + i a D^3 v + i b D^2 v + i c D v + i d v = g``
  (three conditions, sign-dependent),
* complex 2x2 systems ``u_t + i P u = f`` with
  ``P = E D^4 + A D^3 + B D^2 + C D + D0`` (six conditions),
* real 2x2 systems ``w_t + a J w_xxxx + beta w_xx + gamma w_x = h``
  (two trace conditions).

Every integral is read exactly from the zeroth Fourier mode, so residuals are
exact up to roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .periodic import (DEFAULT_TOL, J2, MatrixCoefficient, PeriodicScalar,
                       as_matrix, as_scalar)

#: default absolute tolerance on residuals
VERDICT_TOL = 1e-10


class NonRealCoefficients(ValueError):
    """A real system was given coefficients with a non-negligible imaginary part."""


# ---------------------------------------------------------------------------
# system types

@dataclass(frozen=True)
class SingleEquation:
    """``v_t + sign*i*D^4 v + i(a D^3 + b D^2 + c D + d) v = g``."""

    sign: int = 1
    a: PeriodicScalar = field(default_factory=PeriodicScalar.zero)
    b: PeriodicScalar = field(default_factory=PeriodicScalar.zero)
    c: PeriodicScalar = field(default_factory=PeriodicScalar.zero)
    d: PeriodicScalar = field(default_factory=PeriodicScalar.zero)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        for name in "abcd":
            object.__setattr__(self, name, as_scalar(getattr(self, name)))


@dataclass(frozen=True)
class ComplexSystem:
    """``u_t + i(E D^4 + A D^3 + B D^2 + C D + D) u = f`` with ``D = -i d/dx``."""

    A: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)
    B: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)
    C: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)
    D: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)

    def __post_init__(self):
        for name in "ABCD":
            object.__setattr__(self, name, as_matrix(getattr(self, name)))

    @property
    def bandwidth(self) -> int:
        return max(m.K for m in (self.A, self.B, self.C, self.D))

    def with_D(self, D) -> "ComplexSystem":
        return ComplexSystem(self.A, self.B, self.C, D)

    def shifted(self, s: float) -> "ComplexSystem":
        """All coefficients translated by ``s``."""
        return ComplexSystem(*(_shift(m, s) for m in (self.A, self.B, self.C, self.D)))


@dataclass(frozen=True)
class RealSystem:
    """``w_t + a J w_xxxx + beta w_xx + gamma w_x = h`` with real ``beta``, ``gamma``."""

    beta: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)
    gamma: MatrixCoefficient = field(default_factory=MatrixCoefficient.zero)
    principal_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", as_matrix(self.beta))
        object.__setattr__(self, "gamma", as_matrix(self.gamma))
        if not self.principal_scale or not np.isfinite(self.principal_scale):
            raise ValueError("principal_scale must be a nonzero real number")
        object.__setattr__(self, "principal_scale", float(self.principal_scale))

    @property
    def bandwidth(self) -> int:
        return max(self.beta.K, self.gamma.K)

    def require_real(self, tol: float = DEFAULT_TOL) -> None:
        for name in ("beta", "gamma"):
            m = getattr(self, name)
            if not m.is_real(tol):
                raise NonRealCoefficients(f"{name} is not real-valued to tolerance {tol:g}")

    def normalized(self) -> "RealSystem":
        """Same system divided by the principal scale (``a = 1``)."""
        a = self.principal_scale
        return RealSystem(self.beta / a, self.gamma / a, 1.0)


def _shift(m: MatrixCoefficient, s: float) -> MatrixCoefficient:
    k = np.arange(-m.K, m.K + 1)
    return MatrixCoefficient(m.data * np.exp(1j * k * s))


# ---------------------------------------------------------------------------
# verdicts

@dataclass(frozen=True)
class Condition:
    """One tested condition: its name, the exact integral, and the tested residual."""

    name: str
    integral: complex
    residual: float
    passed: bool


@dataclass(frozen=True)
class Verdict:
    well_posed: bool
    conditions: tuple
    tolerance: float = VERDICT_TOL
    kind: str = ""

    @classmethod
    def from_residuals(cls, items: Iterable[tuple[str, complex, float]], tolerance: float,
                       kind: str = "") -> "Verdict":
        conds = tuple(Condition(n, complex(z), float(r), abs(r) <= tolerance) for n, z, r in items)
        return cls(all(c.passed for c in conds), conds, tolerance, kind)

    @property
    def residuals(self) -> list[tuple[str, float]]:
        return [(c.name, c.residual) for c in self.conditions]

    @property
    def residual_values(self) -> np.ndarray:
        return np.array([c.residual for c in self.conditions])

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]

    def report(self) -> dict:
        return {
            "kind": self.kind,
            "well_posed": self.well_posed,
            "tolerance": self.tolerance,
            "conditions": [
                {"name": c.name, "residual": c.residual,
                 "integral_re": c.integral.real, "integral_im": c.integral.imag,
                 "pass": c.passed}
                for c in self.conditions
            ],
        }


# ---------------------------------------------------------------------------
# single equations

def single_integrands(eq: SingleEquation) -> list[tuple[str, PeriodicScalar]]:
    s = eq.sign
    a, b, c = eq.a, eq.b, eq.c
    return [
        ("single_a", a),
        ("single_b", b - s * (3.0 / 8.0) * a * a),
        ("single_c", c - s * 0.5 * a * b - s * 0.125 * a ** 3),
    ]


def check_single(eq: SingleEquation, tolerance: float = VERDICT_TOL) -> Verdict:
    """Imaginary parts of the three mean integrals; all must vanish."""
    items = []
    for name, f in single_integrands(eq):
        z = f.mean_integral()
        items.append((name, z, z.imag))
    return Verdict.from_residuals(items, tolerance, "single")


# ---------------------------------------------------------------------------
# complex systems

def complex_integrands(sys: ComplexSystem) -> list[tuple[str, PeriodicScalar]]:
    A, B, C = sys.A, sys.B, sys.C
    a11, a12, a21, a22 = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    b11, b12, b21, b22 = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
    c11, c22 = C[0, 0], C[1, 1]
    p = a12 * a21
    return [
        ("cond1_a11", a11),
        ("cond2_a22", a22),
        ("cond3_b11", b11 - (3 * a11 * a11 - 4 * p) / 8),
        ("cond4_b22", b22 + (3 * a22 * a22 - 4 * p) / 8),
        ("cond5_c11", c11 + 0.5j * a12.derivative() * a21
         - (a11 * b11 - a12 * b21 - a21 * b12) / 2
         - (a11 ** 3 + 4 * a11 * p - 2 * p * a22) / 8),
        ("cond6_c22", c22 - 0.5j * a12 * a21.derivative()
         + (a22 * b22 - a12 * b21 - a21 * b12) / 2
         + (a22 ** 3 - 4 * p * a22 + 2 * a11 * p) / 8),
    ]


def check_complex(sys: ComplexSystem, tolerance: float = VERDICT_TOL) -> Verdict:
    """The six conditions; ``D`` enters none of them."""
    items = []
    for name, f in complex_integrands(sys):
        z = f.mean_integral()
        items.append((name, z, z.imag))
    return Verdict.from_residuals(items, tolerance, "complex")


# ---------------------------------------------------------------------------
# real systems

def _real_inputs(sys: RealSystem, tol: float) -> RealSystem:
    sys.require_real(tol)
    return sys


def check_real(sys: RealSystem, tolerance: float = VERDICT_TOL,
               real_tol: float = DEFAULT_TOL) -> Verdict:
    """``int tr(beta) = 0`` and ``int tr(J gamma) = 0``.

    Both conditions are zero tests, so dividing the system by ``a`` (and
    reversing time when ``a < 0``) leaves them unchanged; ``principal_scale``
    is therefore ignored.
    """
    _real_inputs(sys, real_tol)
    t1 = sys.beta.trace().mean_integral()
    t2 = (J2 @ sys.gamma).trace().mean_integral()
    return Verdict.from_residuals([("trace_beta", t1, t1.real), ("trace_J_gamma", t2, t2.real)],
                                  tolerance, "real")


def conjugated_coefficients(beta: MatrixCoefficient, gamma: MatrixCoefficient
                            ) -> tuple[MatrixCoefficient, MatrixCoefficient]:
    """``(B~, C~)`` of ``M L M^{-1}`` assembled entrywise from beta and gamma."""
    b11, b12, b21, b22 = beta[0, 0], beta[0, 1], beta[1, 0], beta[1, 1]
    g11, g12, g21, g22 = gamma[0, 0], gamma[0, 1], gamma[1, 0], gamma[1, 1]
    bt = [[(b12 - b21) + 1j * (b11 + b22), -(b12 + b21) + 1j * (b11 - b22)],
          [(b12 + b21) + 1j * (b11 - b22), -(b12 - b21) + 1j * (b11 + b22)]]
    ct = [[(g11 + g22) - 1j * (g12 - g21), (g11 - g22) + 1j * (g12 + g21)],
          [(g11 - g22) - 1j * (g12 + g21), (g11 + g22) + 1j * (g12 - g21)]]
    return MatrixCoefficient.from_entries(bt) * 0.5, MatrixCoefficient.from_entries(ct) * 0.5


def complex_image(sys: RealSystem) -> ComplexSystem:
    """The complex system obtained with ``U = M w`` after normalizing ``a = 1``."""
    n = sys.normalized()
    Bt, Ct = conjugated_coefficients(n.beta, n.gamma)
    return ComplexSystem(MatrixCoefficient.zero(), Bt, Ct, MatrixCoefficient.zero())


def check_real_via_complex(sys: RealSystem, tolerance: float = VERDICT_TOL,
                           real_tol: float = DEFAULT_TOL) -> Verdict:
    """Verdict of :func:`check_complex` on :func:`complex_image`."""
    _real_inputs(sys, real_tol)
    v = check_complex(complex_image(sys), tolerance)
    return Verdict(v.well_posed, v.conditions, v.tolerance, "real_via_complex")


def check_real_time_dependent(sys_of_t: Callable[[float], RealSystem] | Sequence[RealSystem],
                              times: Sequence[float], tolerance: float = VERDICT_TOL,
                              real_tol: float = DEFAULT_TOL) -> Verdict:
    """:func:`check_real` at every sample time.

    ``sys_of_t`` is either a callable ``t -> RealSystem`` or a sequence aligned
    with ``times``.  The reported residual of each condition is the sample
    with the largest magnitude.
    """
    times = list(times)
    if not times:
        raise ValueError("at least one sample time is required")
    if callable(sys_of_t):
        systems = [sys_of_t(t) for t in times]
    else:
        systems = list(sys_of_t)
        if len(systems) != len(times):
            raise ValueError("one system per sample time is required")
    verdicts = [check_real(s, tolerance, real_tol) for s in systems]
    items = []
    for j, name in enumerate(("trace_beta", "trace_J_gamma")):
        worst = max(verdicts, key=lambda v: abs(v.conditions[j].residual)).conditions[j]
        items.append((name, worst.integral, worst.residual))
    out = Verdict.from_residuals(items, tolerance, "real_time_dependent")
    return Verdict(all(v.well_posed for v in verdicts), out.conditions, tolerance, out.kind)


def linear_residual_map() -> np.ndarray:
    """Matrix sending ``(int tr beta, int tr J gamma)`` to the six complex residuals
    of :func:`check_real_via_complex` (for ``a = 1``)."""
    return np.array([[0.0, 0.0], [0.0, 0.0], [0.5, 0.0], [0.5, 0.0], [0.0, -0.5], [0.0, 0.5]])
