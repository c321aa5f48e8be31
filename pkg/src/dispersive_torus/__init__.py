"""Well-posedness tools for fourth-order dispersive systems on the circle."""
__version__ = "0.1.0"

from .periodic import I2, E2, J2, M2, M2_INV, MatrixCoefficient, MeanNonzero, PeriodicScalar
from .symbols import (GalerkinMatrix, NonRealInput, NotDiagonallyDominant, Symbol, TruncatedField,
                      apply, compose, cutoff, galerkin_matrix, multiplier, neumann_inverse)
from .wellposed import (ComplexSystem, Condition, NonRealCoefficients, RealSystem, SingleEquation,
                        Verdict, check_complex, check_real, check_real_time_dependent,
                        check_real_via_complex, check_single)
from .transforms import (ConditionsViolated, diagonalize, real_gauge, verify_diagonalization,
                         verify_energy_estimate)
from .evolve import (EvolutionConfig, StabilityViolation, DimensionCapExceeded, dichotomy_experiment,
                     evolve, growth_study)
from .frame import FrameState, corrected_system, frame_coefficients, frame_wellposedness

__all__ = [name for name in dir() if not name.startswith("_")]
