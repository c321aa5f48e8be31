"""Frame coefficients of a curve flow and the holonomy rotation.

The frame components of the derivatives of a closed curve satisfy a real
fourth-order system.  When the frame has holonomy angle theta the periodic
unknown is P(theta x) times the frame components, which shifts the
coefficients and adds a constant third-order term -4 a theta d^3.
"""
import numpy as np

from dispersive_torus import FrameState, frame_coefficients, frame_wellposedness
from dispersive_torus.periodic import PeriodicScalar
from dispersive_torus.frame import holonomy_correct, trace_identity_residuals

state = FrameState(PeriodicScalar.cos(1, 0.3) + 1.0, PeriodicScalar.sin(2, 0.2), K=1.0, a=1.0, b=0.5, c=-0.25)
fc = frame_coefficients(state)
x = np.linspace(0, 2 * np.pi, 5)
print("beta_hat at x = 0:\n", np.round(fc.beta_hat(x)[0].real, 4))
hc = holonomy_correct(fc, 1.0, state.a)
print("third-order coefficient for theta = 1:", hc.third_order_coeff)
print("identities:", {k: f"{v:.1e}" for k, v in trace_identity_residuals(state, 1.0).items()})
print("constant curvature:", frame_wellposedness(state, 1.0).well_posed)

bumpy = FrameState(state.xi, state.eta, K=PeriodicScalar.sin(1, 0.5) + 1.0, a=1.0)
v = frame_wellposedness(bumpy, 1.0)
print("variable curvature:", v.well_posed, "residuals", np.round(v.residual_values, 4))
