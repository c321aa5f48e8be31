"""Energy estimate after the real gauge transformation.

For a compliant real system the gauged generator has a Hermitian part whose
top eigenvalue does not depend on the mode cutoff, which is the classical
energy estimate.  When tr(beta) has nonzero mean the same construction
leaves a growing symmetric second-order part.
"""
import numpy as np

from dispersive_torus import MatrixCoefficient, PeriodicScalar, RealSystem, real_gauge, verify_energy_estimate
from dispersive_torus.periodic import I2

beta = MatrixCoefficient.from_entries([[PeriodicScalar.cos(1, 0.4), PeriodicScalar.sin(1, 0.2) + 0.3],
                                       [-0.3, PeriodicScalar.sin(1, 0.1)]])
gamma = MatrixCoefficient.from_entries([[0.0, PeriodicScalar.cos(2, 0.2)], [PeriodicScalar.cos(2, 0.2), 0.1]])
good = real_gauge(RealSystem(beta, gamma))
bad = real_gauge(RealSystem(beta=MatrixCoefficient.constant(I2)), strict=False)

print(f"{'N':>4s} {'compliant':>12s} {'beta = I':>12s}")
for N in (16, 32, 64):
    print(f"{N:4d} {verify_energy_estimate(good, N):12.4f} {verify_energy_estimate(bad, N):12.4f}")
print("Psi4 modes:", np.round(good.Psi4.coeffs, 4))
