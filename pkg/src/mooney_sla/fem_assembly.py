"""P1 finite-element discretization of one load step.

The step problem reads: find ``u`` in the constrained space with
``L(u, w) = N(w)`` for all admissible ``w``, where::

    L(u, w) = integral of tr(K[grad u] grad w^T)
    N(w)    = integral over traction edges of f.w
              - integral of tr(T0 grad w^T) + integral of rho g.w

Gradients of P1 functions are constant per triangle and the state is carried
per triangle, so one-point quadrature integrates ``L`` exactly.  Slip nodes
are rotated to (normal, tangent) coordinates and keep only the tangential
unknown; clamped nodes carry no unknown and their prescribed values enter
through a lifting vector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constitutive import tangent_matrix
from .errors import CornerConflictError, MeshError, SolverError
from .mesh_io import CLAMPED, SLIP, TRACTION

__all__ = [
    "FREE",
    "DofMap",
    "RawSystem",
    "LinearSystem",
    "build_dofmap",
    "element_operator",
    "assemble_raw",
    "apply_constraints",
    "assemble",
    "solve",
]

log = logging.getLogger(__name__)

FREE = 0
GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


@dataclass(frozen=True, eq=False)
class DofMap:
    """Per-node constraint kinds and the global unknown numbering.

    ``kind[a]`` is ``FREE`` (two unknowns), ``SLIP`` (one tangential
    unknown, normal stored in ``normal[a]``) or ``CLAMPED`` (none).
    ``index[a, c]`` is the global unknown of component ``c``; slip nodes use
    column 0 only; ``-1`` marks absent unknowns.
    """

    kind: np.ndarray
    normal: np.ndarray
    index: np.ndarray
    ndof: int

    @property
    def n_nodes(self):
        return len(self.kind)

    def prolongation(self):
        """Sparse ``(2N, ndof)`` map from unknowns to Cartesian nodal values."""
        rows, cols, vals = [], [], []
        free = np.flatnonzero(self.kind == FREE)
        for c in (0, 1):
            rows.append(2 * free + c)
            cols.append(self.index[free, c])
            vals.append(np.ones(len(free)))
        slip = np.flatnonzero(self.kind == SLIP)
        tangent = np.column_stack([-self.normal[slip, 1], self.normal[slip, 0]])
        for c in (0, 1):
            rows.append(2 * slip + c)
            cols.append(self.index[slip, 0])
            vals.append(tangent[:, c])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * self.n_nodes, self.ndof),
        )


def build_dofmap(mesh, slip_corners="error", parallel_tol=1e-8):
    """Classify nodes from the boundary labels.

    Clamped edges win over slip edges, which win over traction edges.  A node
    shared by two non-parallel slip edges raises :class:`CornerConflictError`
    unless ``slip_corners="clamp"``, in which case it is clamped (the only
    continuous field satisfying both normal constraints there).
    """
    if slip_corners not in ("error", "clamp"):
        raise ValueError("slip_corners must be 'error' or 'clamp'")
    n = mesh.n_nodes
    kind = np.full(n, FREE, dtype=np.int64)
    normal = np.zeros((n, 2))
    edges, labels = mesh.boundary_edges, mesh.edge_labels
    kind[edges[labels == CLAMPED].ravel()] = CLAMPED

    slip_edges = np.flatnonzero(labels == SLIP)
    if len(slip_edges):
        normals = mesh.normals()
        for e in slip_edges:
            n_e = normals[e]
            for a in edges[e]:
                if kind[a] == CLAMPED:
                    continue
                if kind[a] != SLIP:
                    kind[a] = SLIP
                    normal[a] = n_e
                    continue
                cross = normal[a, 0] * n_e[1] - normal[a, 1] * n_e[0]
                if abs(cross) > parallel_tol:
                    if slip_corners == "clamp":
                        kind[a] = CLAMPED
                        normal[a] = 0.0
                    else:
                        raise CornerConflictError(
                            f"node {a} joins slip edges with normals {tuple(normal[a])} and "
                            f"{tuple(n_e)}; label an adjacent edge as clamped instead"
                        )

    index = np.full((n, 2), -1, dtype=np.int64)
    counter = 0
    for a in range(n):
        if kind[a] == FREE:
            index[a] = (counter, counter + 1)
            counter += 2
        elif kind[a] == SLIP:
            index[a, 0] = counter
            counter += 1
    return DofMap(kind=kind, normal=normal, index=index, ndof=counter)


@dataclass(frozen=True, eq=False)
class RawSystem:
    """Unconstrained ``(2N, 2N)`` operator and load (dof ``2a + c``)."""

    matrix: sp.csr_matrix
    rhs: np.ndarray


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Constrained operator, load and the data to rebuild nodal fields.

    The matrix is generally non-symmetric.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    prolongation: sp.csr_matrix
    lift: np.ndarray

    def expand(self, q):
        """Nodal displacement ``(N, 2)`` from a vector of unknowns."""
        full = self.prolongation @ np.asarray(q, dtype=float) + self.lift
        return full.reshape(-1, 2)

    def restrict(self, u):
        """Unknowns of a nodal field that already satisfies the constraints."""
        full = np.asarray(u, dtype=float).ravel() - self.lift
        return self.prolongation.T @ full


def _gradient_operator(G):
    """``D`` with ``vec(grad u) = D @ u_local``, shape ``(M, 4, 6)``."""
    M = len(G)
    D = np.zeros((M, 4, 6))
    for a in range(3):
        for i in range(2):
            for j in range(2):
                D[:, 2 * i + j, 2 * a + i] = G[:, a, j]
    return D


def element_operator(mesh, states, beta, params):
    """Element matrices ``(M, 6, 6)``, gradient operators and areas."""
    G = mesh.gradients()
    area = mesh.areas()
    D = _gradient_operator(G)
    K = tangent_matrix(states.B0, states.T0, beta, params)
    Ke = area[:, None, None] * np.einsum("eki,ekl,elj->eij", D, K, D)
    return Ke, D, area


def _local_dofs(mesh):
    t = mesh.triangles
    return np.stack([2 * t[:, 0], 2 * t[:, 0] + 1, 2 * t[:, 1], 2 * t[:, 1] + 1,
                     2 * t[:, 2], 2 * t[:, 2] + 1], axis=1)


def traction_load(mesh, traction):
    """Consistent nodal loads from tractions on label-1 edges.

    ``traction`` has one row per boundary edge: either a constant 2-vector
    ``(K, 2)`` or endpoint values ``(K, 2, 2)`` for a linear variation.
    Rows of non-traction edges are ignored.  Two-point Gauss per edge.
    """
    n = mesh.n_nodes
    load = np.zeros((n, 2))
    if traction is None:
        return load.ravel()
    traction = np.asarray(traction, dtype=float)
    K = len(mesh.boundary_edges)
    if traction.shape[0] != K:
        raise MeshError(f"traction needs one row per boundary edge ({K})")
    if traction.ndim == 2:
        traction = np.repeat(traction[:, None, :], 2, axis=1)
    sel = np.flatnonzero(mesh.edge_labels == TRACTION)
    lengths = mesh.edge_lengths()[sel]
    ij = mesh.boundary_edges[sel]
    fi, fj = traction[sel, 0], traction[sel, 1]
    for xi in GAUSS2:
        f = (1.0 - xi) * fi + xi * fj
        w = 0.5 * lengths[:, None]
        np.add.at(load, ij[:, 0], w * (1.0 - xi) * f)
        np.add.at(load, ij[:, 1], w * xi * f)
    return load.ravel()


def assemble_raw(mesh, states, beta, params, traction=None, gravity_on=False):
    """Unconstrained global operator and load for the current step."""
    if len(states) != mesh.n_triangles:
        raise MeshError(f"{len(states)} states for {mesh.n_triangles} triangles")
    Ke, D, area = element_operator(mesh, states, beta, params)
    dofs = _local_dofs(mesh)
    ndof = 2 * mesh.n_nodes
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    matrix = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()

    rhs = np.zeros(ndof)
    T0 = states.T0.reshape(-1, 4)
    fe = -area[:, None] * np.einsum("eki,ek->ei", D, T0)
    if gravity_on:
        g = np.asarray(params.gravity, dtype=float)
        # integral of a P1 hat function over a triangle is area/3
        body = (states.rho * area / 3.0)[:, None] * g[None, :]
        fe += np.tile(body, (1, 3))
    np.add.at(rhs, dofs.ravel(), fe.ravel())
    rhs += traction_load(mesh, traction)
    return RawSystem(matrix=matrix, rhs=rhs)


def apply_constraints(raw, dofmap, prescribed=None):
    """Reduce a raw system to the constrained unknowns.

    ``prescribed`` gives nodal displacements ``(N, 2)`` used at clamped
    nodes (default zero); their effect is moved to the right-hand side.
    """
    P = dofmap.prolongation()
    lift = np.zeros(2 * dofmap.n_nodes)
    if prescribed is not None:
        prescribed = np.asarray(prescribed, dtype=float).reshape(-1, 2)
        clamped = np.flatnonzero(dofmap.kind == CLAMPED)
        lift.reshape(-1, 2)[clamped] = prescribed[clamped]
    PT = P.T.tocsr()
    matrix = (PT @ raw.matrix @ P).tocsr()
    rhs = PT @ (raw.rhs - raw.matrix @ lift)
    return LinearSystem(matrix=matrix, rhs=rhs, dofmap=dofmap, prolongation=P, lift=lift)


def assemble(mesh, states, beta, params, traction=None, gravity_on=False, dofmap=None,
             prescribed=None):
    """Constrained step system (see :func:`assemble_raw`, :func:`apply_constraints`)."""
    if dofmap is None:
        dofmap = build_dofmap(mesh)
    raw = assemble_raw(mesh, states, beta, params, traction=traction, gravity_on=gravity_on)
    return apply_constraints(raw, dofmap, prescribed=prescribed)


def _residual(A, q, b, bnorm):
    return float(np.linalg.norm(A @ q - b)) / bnorm


def _cgnr(A, b, tol, max_iter):
    """Conjugate gradients on the normal equations ``A^T A q = A^T b``."""
    AT = A.T.tocsr()
    op = spla.LinearOperator(A.shape, matvec=lambda v: AT @ (A @ v), dtype=float)
    q, info = spla.cg(op, AT @ b, rtol=tol * 1e-3, atol=0.0, maxiter=max_iter)
    return q


def solve(system, tol=1e-10, max_iter=1000, method="lu", return_info=False):
    """Solve the constrained system and return nodal displacements ``(N, 2)``.

    ``method`` is ``"lu"`` (sparse LU, falling back to preconditioned GMRES
    when the factorization fails or misses ``tol``), ``"gmres"`` or
    ``"cgnr"``.  Success means ``||A q - b|| / ||b|| <= tol``.

    Raises
    ------
    SolverError
        When no method reaches the tolerance.  Under certified coercivity the
        operator is invertible, so this usually means the step lost
        coercivity; run the certification on the current state.
    """
    if method not in ("lu", "gmres", "cgnr"):
        raise ValueError(f"unknown solver method {method!r}")
    A, b = system.matrix, system.rhs
    bnorm = float(np.linalg.norm(b))
    info = {"method": method, "residual": 0.0}
    if A.shape[0] == 0 or bnorm == 0.0:
        q = np.zeros(A.shape[0])
        u = system.expand(q)
        return (u, info) if return_info else u

    q = None
    res = np.inf
    if method == "lu":
        try:
            q = spla.splu(A.tocsc()).solve(b)
            res = _residual(A, q, b, bnorm)
        except RuntimeError as exc:
            log.warning("sparse LU failed (%s); trying GMRES", exc)
        if not res <= tol:
            method = "gmres"
            info["fallback"] = "gmres"
    if method == "gmres":
        try:
            M = spla.LinearOperator(A.shape, spla.spilu(A.tocsc()).solve)
        except RuntimeError:
            M = None
        q, _ = spla.gmres(A, b, rtol=tol * 1e-2, atol=0.0, restart=min(200, A.shape[0]),
                          maxiter=max_iter, M=M)
        res = _residual(A, q, b, bnorm)
    elif method == "cgnr":
        q = _cgnr(A, b, tol, max_iter)
        res = _residual(A, q, b, bnorm)

    info["residual"] = res
    if not res <= tol:
        raise SolverError(
            f"linear solve stagnated (relative residual {res:.3e} > {tol:g}); "
            "the step operator may have lost coercivity - run certify on this state"
        )
    u = system.expand(q)
    return (u, info) if return_info else u
