"""Integral conditions for fourth-order systems on the circle.

A 2x2 system  u_t + i(E D^4 + A D^3 + B D^2 + C D + D) u = f  is L^2 well-posed
exactly when six mean-value conditions on its coefficients hold.  Here we
evaluate them for a few systems and confirm that the real and complex forms
of the test give the same answer.
"""
import numpy as np

from dispersive_torus import (ComplexSystem, MatrixCoefficient, PeriodicScalar, RealSystem, check_complex,
                              check_real, check_real_via_complex)


def show(title, verdict):
    print(f"{title}: {'well-posed' if verdict.well_posed else 'ill-posed'}")
    for name, res in verdict.residuals:
        print(f"    {name:14s} {res: .6f}")


# a purely imaginary constant a11 violates the first condition (and, through a11^3, the fifth)
show("A = diag(i, 0)", check_complex(ComplexSystem(A=MatrixCoefficient.constant(np.diag([1j, 0])))))

# a coupling whose conditions 1-4 cancel but whose first-order part does not
A = MatrixCoefficient.from_entries([[0, PeriodicScalar.from_modes({1: 1.0})],
                                    [PeriodicScalar.from_modes({-1: 1j}), 0]])
show("oscillating coupling", check_complex(ComplexSystem(A=A, B=MatrixCoefficient.constant(np.diag([-0.5j, 0.5j])))))

# a real system w_t + J w_xxxx + beta w_xx + gamma w_x = h: tr(beta) and tr(J gamma) must average to zero
beta = MatrixCoefficient.from_entries([[PeriodicScalar.cos(1, 0.3), 0.5], [-0.2, -PeriodicScalar.cos(1, 0.3)]])
gamma = MatrixCoefficient.from_entries([[PeriodicScalar.sin(2, 0.4), 0.1], [0.1, 0.0]])
sys = RealSystem(beta, gamma)
show("real system", check_real(sys))
print("complex route agrees:", check_real_via_complex(sys).well_posed == check_real(sys).well_posed)
