"""
Mooney-Rivlin stress and its step linearization
================================================

Evaluate the Cauchy stress of a sheared state, the tangent operator ``K``
and one linearized state update, then watch the linearization error shrink
quadratically with the step size.
"""
import numpy as np

from mooney_sla import MaterialParams, QuadPointState, cauchy_stress, tangent_K, update_state
from mooney_sla.oracles import exact_relative_piola, piola_kirchhoff_linearized

params = MaterialParams(s1=1.0, s2=-0.3, beta=100.0)

#%%
# Simple shear by 0.5 at the stress-free pressure ``s1 + s2``: the shear
# stress is ``(s1 - s2) * 0.5``.
F = np.array([[1.0, 0.5], [0.0, 1.0]])
B = F @ F.T
T = cauchy_stress(B, params.stress_free_pressure, params)
print("T =\n", T)

#%%
# At the undeformed state ``K[I]`` is a multiple of the identity.
print("K[I] =\n", tangent_K(np.eye(2), np.eye(2), np.zeros((2, 2)), params.beta, params))

#%%
# One update with a small dilatation ``H = 0.01 I``: pressure drops by
# ``beta tr H`` and density by the factor ``1 - tr H``.
state = QuadPointState.initial(params)
new = update_state(state, 0.01 * np.eye(2), params.beta, params)
print("p0:", state.p0, "->", new.p0, " rho:", state.rho, "->", new.rho)

#%%
# Linearization error against the exact nonlinear stress for shrinking steps.
rng = np.random.default_rng(0)
H = rng.normal(size=(2, 2))
H /= np.linalg.norm(H)
T0 = cauchy_stress(B, 0.2, params)
for t in (1e-1, 1e-2, 1e-3, 1e-4):
    err = np.linalg.norm(exact_relative_piola(B, 0.2, t * H, params.beta, params)
                         - piola_kirchhoff_linearized(T0, t * H, B, params.beta, params))
    print(f"|H| = {t:.0e}   error = {err:.3e}")
