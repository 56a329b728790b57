"""Independent reference computations used to cross-check the solver.

Each oracle reaches its answer by a route that does not reuse the code path
it checks: the quadratic form is evaluated from its raw trace expression and
from the symmetric/skew block decomposition, positive semidefiniteness from
Jacobi eigenvalues, the patch test from a 4-unknown linear system, and the
simple-shear state in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import cauchy_stress, det2, inv2, piola_kirchhoff_linearized, tangent_K
from .errors import InternalInconsistencyError
from .mesh_io import TRACTION

__all__ = [
    "ShearSolution",
    "pure_shear_oracle",
    "trace_form",
    "block_form",
    "quadform_trace_oracle",
    "jacobi_eigenvalues",
    "psd_eigen_oracle",
    "patch_test_oracle",
    "traction_residual",
    "exact_relative_piola",
    "linearization_slope",
]

I2 = np.eye(2)


@dataclass(frozen=True)
class ShearSolution:
    kappa: float
    F: np.ndarray
    B: np.ndarray
    Binv: np.ndarray
    T12: float
    p_free: float

    def stress(self, p, params):
        """Cauchy stress of the shear state at pressure ``p``."""
        return -p * I2 + params.s1 * self.B + params.s2 * self.Binv


def pure_shear_oracle(kappa, params):
    """Homogeneous simple shear ``F = [[1, kappa], [0, 1]]``.

    ``p_free`` is the pressure for which ``T22 = 0``.
    """
    k = float(kappa)
    F = np.array([[1.0, k], [0.0, 1.0]])
    B = np.array([[1.0 + k * k, k], [k, 1.0]])
    Binv = np.array([[1.0, -k], [-k, 1.0 + k * k]])
    return ShearSolution(
        kappa=k, F=F, B=B, Binv=Binv,
        T12=(params.s1 - params.s2) * k,
        p_free=params.s1 * B[1, 1] + params.s2 * Binv[1, 1],
    )


def _tr(A):
    return np.trace(A, axis1=-2, axis2=-1)


def trace_form(H, W, B0, T0, beta, params):
    """``A(x; H, W)`` written directly as a sum of traces."""
    H, W, B0, T0 = (np.asarray(a, dtype=float) for a in (H, W, B0, T0))
    Ht = np.swapaxes(H, -1, -2)
    Wt = np.swapaxes(W, -1, -2)
    Bi = inv2(B0)
    bI = np.asarray(beta, dtype=float)[..., None, None] * I2
    return (_tr(H) * _tr((T0 + bI) @ Wt)
            - _tr(T0 @ Ht @ Wt)
            + params.s1 * _tr((H @ B0 + B0 @ Ht) @ Wt)
            - params.s2 * _tr((Bi @ H + Ht @ Bi) @ Wt))


def block_form(H, gamma1, gamma2, p0, beta, params, parts=False):
    """``A(x; H, H)`` for diagonal ``B0`` through ``H = E + R``.

    ``E = [[a, b], [b, c]]`` and ``R = [[0, d], [-d, 0]]``.  The diagonal
    stresses are ``t_i = -p0 + s1 gamma_i + s2 / gamma_i``.
    """
    H = np.asarray(H, dtype=float)
    g1 = np.asarray(gamma1, dtype=float)
    g2 = np.asarray(gamma2, dtype=float)
    s1, s2 = params.s1, params.s2
    a, c = H[..., 0, 0], H[..., 1, 1]
    b = 0.5 * (H[..., 0, 1] + H[..., 1, 0])
    d = 0.5 * (H[..., 0, 1] - H[..., 1, 0])
    t1 = -p0 + s1 * g1 + s2 / g1
    t2 = -p0 + s1 * g2 + s2 / g2
    A1 = (a + c) * (a * t1 + c * t2) + beta * (a + c) ** 2
    A2 = -t1 * (a * a + b * b - d * d) - t2 * (b * b + c * c - d * d)
    A3 = 2 * s1 * (g1 * a * a + g2 * c * c + (g1 + g2) * b * b + (g2 - g1) * b * d)
    A4 = -2 * s2 * (a * a / g1 + c * c / g2 + (1 / g1 + 1 / g2) * b * b
                    + (1 / g1 - 1 / g2) * b * d)
    if parts:
        return A1, A2, A3, A4
    return A1 + A2 + A3 + A4


def _rel_diff(x, y, scale):
    return np.abs(x - y) / np.maximum.reduce([np.abs(x), np.abs(y), scale, np.full_like(scale, 1e-300)])


def quadform_trace_oracle(H, B0_diag, p0, beta, params, rtol=1e-12):
    """Quadratic form at diagonal ``B0`` by two routes, checked against each other.

    Relative differences are measured against the larger of the two values
    and the sum of magnitudes of the four block contributions, so
    cancellation between blocks does not inflate the ratio.

    Raises
    ------
    InternalInconsistencyError
        When the trace route and the block route disagree beyond ``rtol``.
    """
    H = np.asarray(H, dtype=float)
    g1, g2 = (np.asarray(g, dtype=float) for g in B0_diag)
    p0 = np.asarray(p0, dtype=float)
    B0 = np.zeros(np.broadcast(g1, g2).shape + (2, 2))
    B0[..., 0, 0] = g1
    B0[..., 1, 1] = g2
    T0 = cauchy_stress(B0, p0, params)
    via_trace = trace_form(H, H, B0, T0, beta, params)
    parts = block_form(H, g1, g2, p0, beta, params, parts=True)
    via_blocks = sum(parts)
    scale = sum(np.abs(p) for p in parts)
    err = _rel_diff(via_trace, via_blocks, scale)
    if np.any(err > rtol):
        raise InternalInconsistencyError(
            f"trace and block forms disagree (max relative difference {np.max(err):.3e})")
    return float(via_trace) if np.ndim(via_trace) == 0 else via_trace


def jacobi_eigenvalues(M, tol=1e-14, max_sweeps=100):
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    ``tol`` times the matrix norm (absolute ``tol`` for norms below one).
    """
    a = [list(map(float, row)) for row in np.asarray(M)]
    n = len(a)
    norm = math.sqrt(sum(x * x for row in a for x in row))
    stop = tol * max(norm, 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                a[p][q] = a[q][p] = 0.0
    return sorted(a[i][i] for i in range(n))


def psd_eigen_oracle(A, alpha, tol=1e-10):
    """True iff the smallest eigenvalue of ``A - alpha I`` is ``>= -tol``."""
    M = A.to_array() - alpha * np.eye(4)
    return jacobi_eigenvalues(M)[0] >= -tol


def patch_test_oracle(t, beta, params, B0=None, T0=None):
    """Homogeneous gradient for the uniaxial-traction patch.

    Left and bottom edges slide (``u_x = 0`` at ``x = 0`` so ``H12 = 0``;
    ``u_y = 0`` at ``y = 0`` so ``H21 = 0``), the right edge carries
    ``(t, 0)`` and the top edge is free: ``(T0 + K[H]) e1 = (t, 0)`` and
    ``(T0 + K[H]) e2 = 0``.  Solved as a least-squares problem over the four
    entries of ``H``; the residual must vanish for a consistent patch.
    """
    B0 = I2 if B0 is None else np.asarray(B0, dtype=float)
    T0 = np.zeros((2, 2)) if T0 is None else np.asarray(T0, dtype=float)
    cols = []
    for k in range(4):
        E = np.zeros((2, 2))
        E[k // 2, k % 2] = 1.0
        cols.append(tangent_K(E, B0, T0, beta, params).ravel())
    Kmap = np.column_stack(cols)  # vec(K[H]) = Kmap @ vec(H)
    # rows: K11, K21 (traction on e1), K12, K22 (traction on e2), H12, H21
    rows = np.vstack([Kmap[[0, 2, 1, 3]], [0, 1, 0, 0], [0, 0, 1, 0]])
    rhs = np.array([t - T0[0, 0], -T0[1, 0], -T0[0, 1], -T0[1, 1], 0.0, 0.0])
    h, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    if np.linalg.norm(rows @ h - rhs) > 1e-10 * max(1.0, abs(t)):
        raise InternalInconsistencyError("patch conditions are inconsistent")
    return h.reshape(2, 2)


def traction_residual(mesh, states, u, traction, beta, params):
    """Squared L2 mismatch of ``T_k n - f`` summed over traction edges.

    ``T_k = T0 + K[grad u]`` is constant on each triangle; ``traction``
    follows :func:`fem_assembly.traction_load` (one row per boundary edge).
    """
    sel = np.flatnonzero(mesh.edge_labels == TRACTION)
    if len(sel) == 0:
        return 0.0
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    owner = mesh.edge_elements[sel]
    G = mesh.gradients()[owner]
    H = np.einsum("eai,eaj->eij", u[mesh.triangles[owner]], G)
    st = states.take(owner)
    Tk = piola_kirchhoff_linearized(st.T0, H, st.B0, beta, params)
    n = mesh.normals()[sel]
    Tn = np.einsum("eij,ej->ei", Tk, n)
    f = np.zeros((len(sel), 2, 2)) if traction is None else np.asarray(traction, dtype=float)[sel]
    if f.ndim == 2:
        f = np.repeat(f[:, None, :], 2, axis=1)
    lengths = mesh.edge_lengths()[sel]
    total = 0.0
    for xi in (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)):
        r = Tn - ((1.0 - xi) * f[:, 0] + xi * f[:, 1])
        total += float(np.sum(0.5 * lengths * np.sum(r * r, axis=1)))
    return total


def exact_relative_piola(B0, p0, H, beta, params):
    """Nonlinear relative Piola-Kirchhoff stress after the increment ``H``.

    The pressure follows the law with constant ``rho dp/drho = beta``,
    i.e. ``p = p0 - beta log det(I + H)``, whose first-order part is the
    linearized update ``p0 - beta tr H``.
    """
    IH = I2 + np.asarray(H, dtype=float)
    J = det2(IH)
    B = IH @ B0 @ np.swapaxes(IH, -1, -2)
    p = p0 - beta * np.log(J)
    T = cauchy_stress(B, p, params)
    return J[..., None, None] * T @ np.swapaxes(inv2(IH), -1, -2)


def linearization_slope(B0, p0, H, beta, params, ts=None):
    """Log-log slope of ``||exact - linearized||`` against the step size ``t``.

    Returns ``(slope, ts, errors)`` for the increments ``t H``.
    """
    ts = np.logspace(-2, -6, 9) if ts is None else np.asarray(ts, dtype=float)
    T0 = cauchy_stress(B0, p0, params)
    errs = np.array([
        np.linalg.norm(exact_relative_piola(B0, p0, t * H, beta, params)
                       - piola_kirchhoff_linearized(T0, t * H, B0, beta, params))
        for t in ts
    ])
    slope = np.polyfit(np.log(ts * np.linalg.norm(H)), np.log(errs), 1)[0]
    return float(slope), ts, errs
