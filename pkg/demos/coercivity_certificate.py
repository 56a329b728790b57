"""
Certifying a linearized step
============================

Build the 4x4 coercivity matrix at a pre-stretched point, test it for
positive semidefiniteness, and let :func:`certify` find the smallest bulk
modulus ``beta0`` that makes the step problem coercive.
"""
import numpy as np

from mooney_sla import MaterialParams, SpectralState, build_A, certify, check_psd, spectral_of
from mooney_sla.errors import HypothesesViolatedError
from mooney_sla.oracles import jacobi_eigenvalues

params = MaterialParams(s1=1.0, s2=0.0, beta=10.0)

#%%
# ``B0 = diag(4, 0.25)`` at pressure ``-0.7``.
point = spectral_of(np.diag([4.0, 0.25]), -0.7, params)
A = build_A(point, 10.0, params)
print(A.to_array())
print("PSD with alpha = 0.1:", check_psd(A, 0.1))
print("smallest eigenvalue of A - 0.1 I:", jacobi_eigenvalues(A.to_array() - 0.1 * np.eye(4))[0])

#%%
# The smallest admissible beta.  For this point it has the closed form
# ``4.820625 / 2.65``.
report = certify([point], alpha=0.1, k=0.5, params=params)
print("beta0 =", report.beta0, " closed form:", 4.820625 / 2.65)

#%%
# A pressure outside the admissible window is rejected, and the report
# rides on the exception.
bad = SpectralState.from_eigenvalues(1.0, 1.0, 3.0, params)
try:
    certify([bad], alpha=0.1, k=0.5, params=params)
except HypothesesViolatedError as exc:
    print("rejected:", exc)
    print("violated:", sorted({v["condition"] for v in exc.report.violations}))
