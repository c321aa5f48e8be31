"""Random inputs shared by the test modules."""
from __future__ import annotations

import numpy as np

from dispersive_torus.frame import FrameState
from dispersive_torus.periodic import MatrixCoefficient, PeriodicScalar
from dispersive_torus.wellposed import ComplexSystem, RealSystem


def rand_scalar(rng: np.random.Generator, K: int, real: bool = False, amp: float = 1.0) -> PeriodicScalar:
    c = amp * (rng.uniform(-1, 1, 2 * K + 1) + 1j * rng.uniform(-1, 1, 2 * K + 1))
    if real:
        c = 0.5 * (c + c[::-1].conj())
    return PeriodicScalar(c)


def rand_matrix(rng: np.random.Generator, K: int, real: bool = False, amp: float = 1.0) -> MatrixCoefficient:
    return MatrixCoefficient.from_entries([[rand_scalar(rng, K, real, amp) for _ in range(2)] for _ in range(2)])


def random_real_system(rng, K: int = 3, amp: float = 1.0) -> RealSystem:
    return RealSystem(rand_matrix(rng, K, True, amp), rand_matrix(rng, K, True, amp))


def make_compliant(sys: RealSystem) -> RealSystem:
    """Remove the means of tr(beta) and tr(J gamma)."""
    b, g = sys.beta, sys.gamma
    mb = b.trace().mean().real
    mg = (g[0, 1] - g[1, 0]).mean().real
    b = b - MatrixCoefficient.constant(np.diag([mb / 2, mb / 2]))
    g = g - MatrixCoefficient.constant(np.array([[0, mg / 2], [-mg / 2, 0]]))
    return RealSystem(b, g, sys.principal_scale)


def random_compliant_real(rng, K: int = 2, amp: float = 0.3) -> RealSystem:
    return make_compliant(random_real_system(rng, K, amp))


def random_complex_system(rng, K: int = 2, amp: float = 0.3) -> ComplexSystem:
    return ComplexSystem(*(rand_matrix(rng, K, False, amp) for _ in range(4)))


def random_frame_state(rng, constant_K: bool = True, l: int | None = None) -> FrameState:
    xi = rand_scalar(rng, 2, True, 0.5) + 1.0
    eta = rand_scalar(rng, 2, True, 0.5)
    K = float(rng.uniform(-2, 2)) if constant_K else rand_scalar(rng, 2, True, 0.5) + 1.0
    a = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2))
    return FrameState(xi, eta, K, a, float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                      int(l if l is not None else rng.integers(4, 9)))
