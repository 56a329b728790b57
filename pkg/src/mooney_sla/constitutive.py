"""Mooney-Rivlin law and its linearization about the current configuration.

All tensors are 2x2 numpy arrays.  Every function also accepts stacks of
tensors with shape ``(..., 2, 2)`` (scalars then have shape ``(...)``), so a
whole mesh worth of element states is processed in one call.

The constitutive law is ``T = -p I + s1 B + s2 B^-1`` with ``B = F F^T``.
Over one load step the relative displacement gradient ``H`` is small and the
stress, pressure, density and deformation gradient are advanced by their
first-order updates::

    F+   = (I + H) F
    T+   = T + L(F)[H],  L(F)[H] = beta tr(H) I + dT~(F)[H]
    p+   = p - beta tr(H)
    rho+ = rho (1 - tr(H))

where ``dT~(F)[H] = s1 (H B + B H^T) - s2 (B^-1 H + H^T B^-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, SingularStrainError, StepTooLargeError

__all__ = [
    "MaterialParams",
    "QuadPointState",
    "inv2",
    "det2",
    "cauchy_stress",
    "dF_tilde",
    "stress_increment",
    "tangent_K",
    "piola_kirchhoff_linearized",
    "tangent_matrix",
    "update_state",
    "SINGULAR_TOL",
]

SINGULAR_TOL = 1e-14
IDENTITY = np.eye(2)


@dataclass(frozen=True)
class MaterialParams:
    """Constants of a nearly incompressible Mooney-Rivlin solid.

    Parameters
    ----------
    s1, s2 : float
        Material moduli (Pa).  Require ``s1 > 0`` and ``s2 < s1``.
    beta : float
        Incompressibility modulus (Pa), ``beta = rho dp/drho``.  Held
        constant over a run.
    rho0 : float
        Mass density in the preferred configuration (kg/m^3).
    gravity : 2-vector
        Body acceleration (m/s^2).
    """

    s1: float
    s2: float
    beta: float
    rho0: float = 1.0
    gravity: tuple = field(default=(0.0, 0.0))

    def __post_init__(self):
        for name in ("s1", "s2", "beta", "rho0"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if not (self.s1 > 0 and self.s2 < self.s1):
            raise ParameterError(
                f"material parameters must satisfy s1 > 0 and s2 < s1 "
                f"(got s1={self.s1}, s2={self.s2})"
            )
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive (got {self.beta})")
        if not self.rho0 > 0:
            raise ParameterError(f"rho0 must be positive (got {self.rho0})")
        g = tuple(float(x) for x in self.gravity)
        if len(g) != 2 or not all(np.isfinite(g)):
            raise ParameterError("gravity must be a finite 2-vector")
        object.__setattr__(self, "gravity", g)

    @property
    def e_inequalities(self):
        """True in the classical regime ``s2 <= 0 < s1``."""
        return self.s2 <= 0

    @property
    def negative_s2(self):
        """True when ``s2 < 0`` (selects the first branch of the coercivity bounds)."""
        return self.s2 < 0

    @property
    def stress_free_pressure(self):
        """Pressure that makes ``T = 0`` when ``B = I``."""
        return self.s1 + self.s2

    def with_beta(self, beta):
        return replace(self, beta=beta)


def det2(A):
    A = np.asarray(A, dtype=float)
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def inv2(A, tol=SINGULAR_TOL):
    """Closed-form inverse of (a stack of) 2x2 matrices via the adjugate."""
    A = np.asarray(A, dtype=float)
    d = det2(A)
    if np.any(np.abs(d) < tol):
        raise SingularStrainError(f"singular 2x2 tensor (|det| < {tol:g})")
    adj = np.empty_like(A)
    adj[..., 0, 0] = A[..., 1, 1]
    adj[..., 1, 1] = A[..., 0, 0]
    adj[..., 0, 1] = -A[..., 0, 1]
    adj[..., 1, 0] = -A[..., 1, 0]
    return adj / d[..., None, None]


def _t(A):
    return np.swapaxes(A, -1, -2)


def _tr(A):
    return A[..., 0, 0] + A[..., 1, 1]


def cauchy_stress(B, p, params):
    """Cauchy stress ``-p I + s1 B + s2 B^-1``."""
    B = np.asarray(B, dtype=float)
    p = np.asarray(p, dtype=float)
    # elastic part first: at B = I and p = s1 + s2 this cancels exactly
    return (params.s1 * B + params.s2 * inv2(B)) - p[..., None, None] * IDENTITY


def dF_tilde(H, B, params):
    """Directional derivative of ``s1 B + s2 B^-1`` along the relative gradient ``H``."""
    H = np.asarray(H, dtype=float)
    B = np.asarray(B, dtype=float)
    Binv = inv2(B)
    Ht = _t(H)
    return params.s1 * (H @ B + B @ Ht) - params.s2 * (Binv @ H + Ht @ Binv)


def stress_increment(H, B, beta, params):
    """``L(F)[H] = beta tr(H) I + dF_tilde(H, B)`` with ``B = F F^T``."""
    H = np.asarray(H, dtype=float)
    return beta * _tr(H)[..., None, None] * IDENTITY + dF_tilde(H, B, params)


def tangent_K(H, B0, T0, beta, params):
    """Linear part of the relative first Piola-Kirchhoff stress.

    ``K[H] = tr(H) (T0 + beta I) - T0 H^T + s1 (H B0 + B0 H^T)
    - s2 (B0^-1 H + H^T B0^-1)``.  Not symmetric in general.
    """
    H = np.asarray(H, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    trH = _tr(H)[..., None, None]
    return trH * (T0 + beta * IDENTITY) - T0 @ _t(H) + dF_tilde(H, B0, params)


def piola_kirchhoff_linearized(T0, H, B0, beta, params):
    """First-order relative Piola-Kirchhoff stress ``T0 + K[H]``."""
    return np.asarray(T0, dtype=float) + tangent_K(H, B0, T0, beta, params)


def tangent_matrix(B0, T0, beta, params):
    """Matrix of ``H -> K[H]`` acting on row-major flattened tensors.

    Returns shape ``(..., 4, 4)`` with ``K[H].ravel() == M @ H.ravel()``.
    Columns are obtained by applying :func:`tangent_K` to the unit tensors,
    so the assembly uses exactly the same code path as the pointwise law.
    """
    B0 = np.asarray(B0, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    batch = B0.shape[:-2]
    M = np.empty(batch + (4, 4))
    for col in range(4):
        E = np.zeros(batch + (2, 2))
        E[..., col // 2, col % 2] = 1.0
        M[..., :, col] = tangent_K(E, B0, T0, beta, params).reshape(batch + (4,))
    return M


@dataclass(frozen=True)
class QuadPointState:
    """Mechanical state at one (or a stack of) sample points.

    ``F`` is measured from the preferred configuration, ``B0 = F F^T``,
    ``T0`` the Cauchy stress, ``p0`` the pressure and ``rho`` the density.
    Arrays may carry a leading element axis.
    """

    F: np.ndarray
    B0: np.ndarray
    T0: np.ndarray
    p0: np.ndarray
    rho: np.ndarray

    @classmethod
    def initial(cls, params, n=None, F=None, p0=None):
        """Consistent starting state.

        Defaults to the undeformed, stress-free state ``F = I`` with
        ``p0 = s1 + s2``.  With ``n`` given, a stack of ``n`` identical
        states is returned.
        """
        F = IDENTITY if F is None else np.asarray(F, dtype=float)
        if p0 is None:
            p0 = params.stress_free_pressure
        if n is not None:
            F = np.broadcast_to(F, (n, 2, 2)).copy()
            p0 = np.full(n, float(p0))
        p0 = np.asarray(p0, dtype=float)
        detF = det2(F)
        if np.any(detF <= 0):
            raise ParameterError("initial deformation gradient must have det F > 0")
        B0 = F @ _t(F)
        T0 = cauchy_stress(B0, p0, params)
        return cls(F=F, B0=B0, T0=T0, p0=p0, rho=params.rho0 / detF)

    def __len__(self):
        return 1 if self.F.ndim == 2 else self.F.shape[0]

    def take(self, idx):
        """Sub-state for element index (or index array) ``idx``."""
        return QuadPointState(self.F[idx], self.B0[idx], self.T0[idx],
                              self.p0[idx], self.rho[idx])


def update_state(state, H, beta, params):
    """Advance a state by one linearized step with relative gradient ``H``.

    Raises
    ------
    StepTooLargeError
        If ``det(I + H) <= 1e-8`` anywhere.
    """
    H = np.asarray(H, dtype=float)
    IH = IDENTITY + H
    if np.any(det2(IH) <= 1e-8):
        raise StepTooLargeError(
            "I + H is nearly singular; the step increment is not small"
        )
    trH = _tr(H)
    F = IH @ state.F
    return QuadPointState(
        F=F,
        B0=F @ _t(F),
        T0=state.T0 + stress_increment(H, state.B0, beta, params),
        p0=state.p0 - beta * trH,
        rho=state.rho * (1.0 - trH),
    )
