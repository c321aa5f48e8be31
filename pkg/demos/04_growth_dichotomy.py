"""Bounded versus exploding truncated propagators.

For a11 = 0.01 i the mode k of the first component grows like exp(0.01 t k^3),
so ||exp(t G_N)|| blows up with N; the zero system stays unitary.
"""
import numpy as np

from dispersive_torus import ComplexSystem, MatrixCoefficient, dichotomy_experiment

violating = ComplexSystem(A=MatrixCoefficient.constant(np.diag([0.01j, 0])))
rep = dichotomy_experiment(ComplexSystem(), violating, [8, 16, 32, 48], 0.01)
print(rep.to_csv(), end="")
print("compliant model:", rep.compliant.model)
print("violating model:", rep.violating.model, f"(R^2 against N^3 = {rep.violating.r2_cubic:.4f})")
print("closed form at N = 16:", np.exp(0.01 * 0.01 * 16 ** 3))
print("verdicts consistent:", rep.consistent)
