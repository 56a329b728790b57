"""Pointwise coercivity certification of the linearized step problem.

At a point with left Cauchy-Green tensor ``B0`` (eigenvalues
``gamma1 >= gamma2``) and pressure ``p0``, the quadratic form of the step
problem becomes ``X^T A X`` with ``X = (a, c, b, d)`` collecting the
diagonal, symmetric and skew parts of ``H``.  ``A`` is block diagonal with
two symmetric 2x2 blocks::

    A11 = beta + 2 f(gamma1)        A33 = 2 s1 trB0 - 2 s2 trB0^-1 - trT0
    A22 = beta + 2 f(gamma2)        A44 = trT0
    A12 = beta + trT0 / 2           A34 = s1 (gamma2 - gamma1) - s2 (1/gamma1 - 1/gamma2)

with ``f(g) = s1 g - s2 / g``.  The form is coercive with constant ``alpha``
when ``A - alpha I`` is positive semidefinite.  :func:`certify` checks the
sufficient conditions on ``(k, alpha, p0)`` under which a large enough
``beta`` guarantees this, and searches for the smallest such ``beta``.

Functions accept scalars or equally shaped arrays (one entry per point).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    AlphaTooLargeError,
    BetaExceedsMaxError,
    HypothesesViolatedError,
    InvalidStrainError,
    ParameterError,
)

__all__ = [
    "SpectralState",
    "CoercivityMatrix",
    "CoercivityReport",
    "Roots",
    "spectral_of",
    "build_A",
    "sylvester_minors",
    "check_psd",
    "roots_a_b",
    "default_k",
    "alpha_bound",
    "certify",
]

BETA_TOL = 1e-9


def f_aux(gamma, params):
    return params.s1 * gamma - params.s2 / gamma


def g_aux(gamma, params):
    return params.s1 * gamma + params.s2 / gamma


@dataclass(frozen=True)
class SpectralState:
    """Spectral invariants of ``B0`` plus the pressure at sample points."""

    gamma1: np.ndarray
    gamma2: np.ndarray
    p0: np.ndarray
    detB0: np.ndarray
    trB0: np.ndarray
    trB0inv: np.ndarray
    trT0: np.ndarray

    @classmethod
    def from_eigenvalues(cls, gamma1, gamma2, p0, params):
        g1 = np.asarray(gamma1, dtype=float)
        g2 = np.asarray(gamma2, dtype=float)
        if np.any(g2 <= 0) or np.any(g1 <= 0):
            raise InvalidStrainError("eigenvalues of B0 must be positive")
        g1, g2 = np.maximum(g1, g2), np.minimum(g1, g2)
        det = g1 * g2
        tr = g1 + g2
        return cls._build(g1, g2, np.asarray(p0, dtype=float), det, tr, params)

    @classmethod
    def _build(cls, g1, g2, p0, det, tr, params):
        trinv = tr / det
        trT0 = -2.0 * p0 + params.s1 * tr + params.s2 * trinv
        return cls(g1, g2, p0, det, tr, trinv, trT0)

    @classmethod
    def stack(cls, states):
        """Concatenate several states into one flat batch."""
        cols = {name: np.concatenate([np.atleast_1d(getattr(s, name)) for s in states])
                for name in cls.__dataclass_fields__}
        return cls(**cols)

    def __len__(self):
        return int(np.size(self.gamma1))

    def ravel(self):
        return SpectralState(*(np.atleast_1d(np.asarray(getattr(self, n), dtype=float)).ravel()
                               for n in self.__dataclass_fields__))


def spectral_of(B0, p0, params, sym_tol=1e-10):
    """Eigenvalues and invariants of a symmetric positive definite ``B0``.

    Trace and determinant are taken from the raw entries; ``gamma2`` is
    computed as ``det / gamma1`` to avoid cancellation.
    """
    B0 = np.asarray(B0, dtype=float)
    b11, b22 = B0[..., 0, 0], B0[..., 1, 1]
    b12, b21 = B0[..., 0, 1], B0[..., 1, 0]
    scale = np.maximum(np.abs(B0).max(axis=(-1, -2)), 1e-300)
    if np.any(np.abs(b12 - b21) > sym_tol * scale):
        raise InvalidStrainError("B0 is not symmetric")
    tr = b11 + b22
    det = b11 * b22 - b12 * b21
    if np.any(det <= 0) or np.any(tr <= 0):
        raise InvalidStrainError("B0 is not positive definite")
    off = 0.5 * (b12 + b21)
    g1 = 0.5 * (tr + np.hypot(b11 - b22, 2.0 * off))
    g2 = det / g1
    return SpectralState._build(g1, g2, np.asarray(p0, dtype=float), det, tr, params)


@dataclass(frozen=True)
class CoercivityMatrix:
    """The six independent entries of the block-diagonal matrix ``A``."""

    A11: np.ndarray
    A22: np.ndarray
    A12: np.ndarray
    A33: np.ndarray
    A44: np.ndarray
    A34: np.ndarray
    beta: float = 0.0

    def to_array(self):
        """Dense ``(..., 4, 4)`` matrix in the ordering ``(a, c, b, d)``."""
        entries = np.broadcast_arrays(*(np.asarray(getattr(self, n), dtype=float)
                                        for n in ("A11", "A22", "A12", "A33", "A44", "A34")))
        a11, a22, a12, a33, a44, a34 = entries
        M = np.zeros(a11.shape + (4, 4))
        M[..., 0, 0] = a11
        M[..., 1, 1] = a22
        M[..., 0, 1] = M[..., 1, 0] = a12
        M[..., 2, 2] = a33
        M[..., 3, 3] = a44
        M[..., 2, 3] = M[..., 3, 2] = a34
        return M


def build_A(s, beta, params):
    """Entries of ``A`` for spectral state(s) ``s`` and modulus ``beta``."""
    g1, g2 = s.gamma1, s.gamma2
    s1, s2 = params.s1, params.s2
    return CoercivityMatrix(
        A11=beta + 2.0 * f_aux(g1, params),
        A22=beta + 2.0 * f_aux(g2, params),
        A12=beta + 0.5 * s.trT0,
        A33=2.0 * s1 * s.trB0 - 2.0 * s2 * s.trB0inv - s.trT0,
        A44=s.trT0 + 0.0 * g1,
        A34=s1 * (g2 - g1) - s2 * (1.0 / g1 - 1.0 / g2),
        beta=beta,
    )


def sylvester_minors(A, alpha):
    """Leading quantities whose nonnegativity makes ``A - alpha I`` PSD.

    Returns ``(A11-a, det1, A33-a, det2, A22-a, A44-a)``.  The last two are
    implied by the first four except at exact ties ``A11 = alpha`` or
    ``A33 = alpha``, where they are needed for the test to be exact.
    """
    d11 = A.A11 - alpha
    d22 = A.A22 - alpha
    d33 = A.A33 - alpha
    d44 = A.A44 - alpha
    return (d11, d11 * d22 - A.A12 ** 2, d33, d33 * d44 - A.A34 ** 2, d22, d44)


def check_psd(A, alpha):
    """True iff ``A - alpha I`` is positive semidefinite (ties count as PSD)."""
    ok = np.logical_and.reduce([np.asarray(q) >= 0 for q in sylvester_minors(A, alpha)])
    return bool(ok) if np.ndim(ok) == 0 else ok


class Roots(NamedTuple):
    a_alpha: np.ndarray
    b_alpha: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    a_star: np.ndarray
    b_star: np.ndarray


def roots_a_b(s, alpha, params):
    """Pressure-window endpoints at spectral state(s) ``s``.

    ``[a_alpha, b_alpha]`` is the range of ``-2 p0`` on which the
    determinant of the second block of ``A - alpha I`` is nonnegative;
    ``[a0, b0]`` is its ``alpha = 0`` counterpart written through
    ``sqrt(det B0)``, and ``a_star``, ``b_star`` bound the diagonal
    conditions of that block.

    Raises
    ------
    AlphaTooLargeError
        When the discriminant under the square root is negative.
    """
    s1, s2 = params.s1, params.s2
    sq = np.sqrt(s.detB0)
    C = s1 * sq - s2 / sq
    disc = C ** 2 - 0.5 * alpha * (s1 * s.trB0 - s2 * s.trB0inv) + 0.25 * alpha ** 2
    if np.any(disc < 0):
        raise AlphaTooLargeError(
            f"alpha={alpha:g} too large: negative discriminant in the pressure "
            "window; alpha * dbar must stay below the coercivity bound"
        )
    centre = -2.0 * s2 * s.trB0inv
    r = 2.0 * np.sqrt(disc)
    return Roots(
        a_alpha=centre - r,
        b_alpha=centre + r,
        a0=centre - 2.0 * C,
        b0=centre + 2.0 * C,
        a_star=-s1 * s.trB0 - s2 * s.trB0inv,
        b_star=s1 * s.trB0 - 3.0 * s2 * s.trB0inv,
    )


def default_k(params):
    if params.s2 > 0:
        return max(1e-3, 1.01 * params.s2 / params.s1)
    return 1e-3


def alpha_bound(params, k):
    """Right-hand side ``2 sqrt(-s1 s2)`` or ``2 eps sqrt(k)`` of the alpha condition."""
    if params.s2 < 0:
        return 2.0 * math.sqrt(-params.s1 * params.s2)
    eps = params.s1 - params.s2 / k
    return 2.0 * eps * math.sqrt(k)


@dataclass
class CoercivityReport:
    k: float
    epsilon: float
    dbar: float
    alpha: float
    alpha_max: float
    gap_lo: list
    gap_hi: list
    beta0: float | None
    admissible: bool
    worst_point: int
    beta_max: float = math.inf
    n_points: int = 0
    violations: list = field(default_factory=list)

    @property
    def min_margin(self):
        return float(min(min(self.gap_lo), min(self.gap_hi)))

    def to_dict(self):
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, float) and not math.isfinite(val):
                d[key] = None
        return d


def _min_beta(s, alpha, params, beta_max):
    """Per-point smallest ``beta`` in ``[0, beta_max]`` with ``A - alpha I`` PSD.

    Upward doubling from ``max(alpha, 1e-6)`` brackets the transition, then
    bisection narrows it to ``BETA_TOL``.  The returned value is always one
    at which the PSD test passed; ``inf`` marks unreachable points.
    """
    n = len(s)

    def psd(beta):
        beta = np.where(np.isfinite(beta), beta, 0.0)
        return np.asarray(check_psd(build_A(s, beta, params), alpha), dtype=bool)

    out = np.zeros(n)
    need = ~psd(np.zeros(n))
    if not need.any():
        return out
    lo = np.zeros(n)
    hi = np.full(n, min(max(alpha, 1e-6), beta_max))
    active = need.copy()
    while True:
        ok = psd(hi)
        grow = active & ~ok
        if not grow.any():
            break
        at_cap = grow & (hi >= beta_max)
        hi[at_cap] = math.inf
        active &= ~at_cap
        grow &= ~at_cap
        lo[grow] = hi[grow]
        hi[grow] = np.minimum(2.0 * hi[grow], beta_max)
    reach = need & np.isfinite(hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        busy = reach & (hi - lo > BETA_TOL) & (mid > lo) & (mid < hi)
        if not busy.any():
            break
        ok = psd(np.where(busy, mid, hi))
        hi = np.where(busy & ok, mid, hi)
        lo = np.where(busy & ~ok, mid, lo)
    out[need] = hi[need]
    return out


def certify(points, alpha=None, k=None, beta_max=1e8, params=None, raise_on_failure=True):
    """Check the well-posedness hypotheses at sample points and find ``beta0``.

    Parameters
    ----------
    points : SpectralState or sequence of SpectralState
        One entry per sample point (quadrature point).
    alpha : float, optional
        Coercivity constant; default ``0.9 * alpha_max``.
    k : float, optional
        Lower bound required of ``det B0``; default :func:`default_k`.
    beta_max : float
        Upper end of the ``beta0`` search.
    raise_on_failure : bool
        Raise on failure (the report rides on the exception) instead of
        returning an inadmissible report.

    Raises
    ------
    HypothesesViolatedError
        If ``det B0 >= k``, the alpha bound, the pressure gap or the
        first-block slope condition fails somewhere.
    BetaExceedsMaxError
        If the hypotheses hold but ``A - alpha I`` is not PSD at ``beta_max``.
    """
    if params is None:
        raise ParameterError("certify needs material parameters")
    if not isinstance(points, SpectralState):
        points = SpectralState.stack(list(points))
    s = points.ravel()
    if len(s) == 0:
        raise ParameterError("certify needs at least one sample point")
    s1, s2 = params.s1, params.s2
    if k is None:
        k = default_k(params)
    if not k > max(0.0, s2 / s1):
        raise ParameterError(f"k must exceed max(0, s2/s1) = {max(0.0, s2 / s1):g}")
    if not beta_max > 0:
        raise ParameterError("beta_max must be positive")

    eps = s1 - s2 / k
    D = s.trB0 / np.sqrt(s.detB0)
    dbar = float(D.max())
    bound = alpha_bound(params, k)
    alpha_max = bound / dbar
    if alpha is None:
        alpha = 0.9 * alpha_max
    if not alpha > 0:
        raise ParameterError("alpha must be positive")

    violations = []

    def flag(name, mask, margin, detail):
        for i in np.flatnonzero(mask):
            violations.append({"condition": name, "point": int(i),
                               "margin": float(margin[i]), "detail": detail})

    flag("det_lower_bound", s.detB0 < k, s.detB0 - k, f"det B0 >= k = {k:g}")
    if not alpha * dbar < bound:
        violations.append({"condition": "alpha_bound", "point": int(np.argmax(D)),
                           "margin": float(bound - alpha * dbar),
                           "detail": f"alpha * dbar < {bound:g}"})

    sq = np.sqrt(s.detB0)
    C = s1 * sq - s2 / sq
    centre = -2.0 * s2 * s.trB0inv
    a0, b0 = centre - 2.0 * C, centre + 2.0 * C
    x = -2.0 * s.p0
    gap_lo = x - (a0 + alpha * dbar)
    gap_hi = (b0 - alpha * dbar) - x
    flag("pressure_gap", (gap_lo <= 0) | (gap_hi <= 0), np.minimum(gap_lo, gap_hi),
         "a0 + alpha*dbar < -2 p0 < b0 - alpha*dbar")
    b_star = s1 * s.trB0 - 3.0 * s2 * s.trB0inv
    slope = b_star - 2.0 * alpha - x
    flag("block1_slope", slope <= 0, slope, "-2 p0 < -2 alpha + s1 trB0 - 3 s2 trB0^-1")

    beta_pts = _min_beta(s, alpha, params, beta_max)
    beta0 = float(beta_pts.max())
    worst = int(np.argmin(np.minimum(gap_lo, gap_hi)))
    report = CoercivityReport(
        k=float(k), epsilon=float(eps), dbar=dbar, alpha=float(alpha),
        alpha_max=float(alpha_max), gap_lo=gap_lo.tolist(), gap_hi=gap_hi.tolist(),
        beta0=beta0 if math.isfinite(beta0) else None,
        admissible=not violations and math.isfinite(beta0),
        worst_point=worst, beta_max=float(beta_max), n_points=len(s),
        violations=violations,
    )
    if raise_on_failure:
        if violations:
            first = violations[0]
            raise HypothesesViolatedError(
                f"hypothesis '{first['condition']}' fails at point {first['point']} "
                f"({first['detail']}, margin {first['margin']:.6g})", report)
        if not math.isfinite(beta0):
            bad = int(np.flatnonzero(~np.isfinite(beta_pts))[0])
            raise BetaExceedsMaxError(
                f"A - alpha I not PSD at beta_max={beta_max:g} (point {bad})", report)
    return report
