import math

import numpy as np
import pytest
import scipy.sparse as sp

from mooney_sla import (MaterialParams, QuadPointState, assemble, build_dofmap, certify,
                        rectangle_mesh, solve)
from mooney_sla.constitutive import cauchy_stress
from mooney_sla.errors import CornerConflictError, MeshError, SolverError
from mooney_sla.fem_assembly import (FREE, LinearSystem, assemble_raw, element_operator,
                                     traction_load)
from mooney_sla.mesh_io import CLAMPED, SLIP, TRACTION, build_mesh
from mooney_sla.oracles import trace_form
from mooney_sla.sla_driver import element_gradients
from mooney_sla.suites import random_certified_points


def kite():
    """Two triangles with 45 degree slip edges meeting at node 2."""
    nodes = [[0, 0], [2, 0], [1, 1], [0, 2]]
    return build_mesh(nodes, [[0, 1, 2], [0, 2, 3]],
                      [[0, 1, CLAMPED], [1, 2, SLIP], [2, 3, SLIP], [3, 0, CLAMPED]])


def random_states(rng, mesh, params):
    F = np.eye(2) + 0.2 * rng.normal(size=(mesh.n_triangles, 2, 2))
    p0 = rng.uniform(-1, 1, mesh.n_triangles)
    B0 = F @ np.swapaxes(F, 1, 2)
    return QuadPointState(F=F, B0=B0, T0=cauchy_stress(B0, p0, params), p0=p0,
                          rho=1.0 / np.linalg.det(F))


def test_slip_on_diagonal_edge():
    dm = build_dofmap(kite())
    assert dm.kind[2] == SLIP
    assert np.allclose(dm.normal[2], np.array([1.0, 1.0]) / math.sqrt(2))
    assert dm.ndof == 1
    P = dm.prolongation().toarray()
    assert np.allclose(P[4:6, 0] @ dm.normal[2], 0.0)


def test_axis_aligned_slip_eliminates_uy():
    mesh = rectangle_mesh(1, 1, 2, 1, labels={"bottom": SLIP, "right": CLAMPED, "top": TRACTION,
                                              "left": CLAMPED})
    dm = build_dofmap(mesh)
    slip = np.flatnonzero(dm.kind == SLIP)
    assert len(slip) == 1
    P = dm.prolongation().toarray()
    a = slip[0]
    assert P[2 * a + 1].tolist() == [0.0] * dm.ndof
    assert abs(P[2 * a, dm.index[a, 0]]) == 1.0


def test_slip_corner_conflict():
    mesh = rectangle_mesh(1, 1, 2, 2, labels={"bottom": SLIP, "left": SLIP, "top": TRACTION,
                                              "right": CLAMPED})
    with pytest.raises(CornerConflictError):
        build_dofmap(mesh)
    dm = build_dofmap(mesh, slip_corners="clamp")
    assert dm.kind[0] == CLAMPED


def test_dof_count():
    mesh = rectangle_mesh(1, 1, 3, 3, labels={"bottom": CLAMPED, "left": SLIP, "top": TRACTION,
                                              "right": TRACTION})
    dm = build_dofmap(mesh)
    assert dm.ndof == 2 * np.sum(dm.kind == FREE) + np.sum(dm.kind == SLIP)


def test_zero_rhs_gives_zero_solution(params):
    mesh = rectangle_mesh(1, 1, 2, 2)
    states = QuadPointState.initial(params, n=mesh.n_triangles)
    system = assemble(mesh, states, params.beta, params)
    assert np.all(system.rhs == 0)
    assert np.all(solve(system) == 0)


def test_isotropic_prestress_balances_on_symmetric_patch(params):
    mesh = rectangle_mesh(1, 1, 1, 1)
    states = QuadPointState.initial(params, n=4, p0=params.stress_free_pressure - 0.7)
    raw = assemble_raw(mesh, states, params.beta, params)
    centre = 4
    assert np.allclose(raw.rhs[2 * centre:2 * centre + 2], 0.0, atol=1e-15)


def test_quadratic_form_matches_trace_form(params, rng):
    mesh = rectangle_mesh(1.3, 0.7, 3, 2)
    mesh = mesh.with_nodes(mesh.nodes + 0.02 * rng.normal(size=mesh.nodes.shape))
    states = random_states(rng, mesh, params)
    raw = assemble_raw(mesh, states, params.beta, params)
    for _ in range(10):
        u = rng.normal(size=mesh.n_nodes * 2)
        H = element_gradients(mesh, u)
        ref = np.sum(mesh.areas() * trace_form(H, H, states.B0, states.T0, params.beta, params))
        assert u @ (raw.matrix @ u) == pytest.approx(ref, rel=1e-11)


def test_bilinear_form_matches_trace_form(params, rng):
    mesh = rectangle_mesh(1, 1, 2, 2)
    states = random_states(rng, mesh, params)
    raw = assemble_raw(mesh, states, params.beta, params)
    u, w = rng.normal(size=(2, 2 * mesh.n_nodes))
    Hu, Hw = element_gradients(mesh, u), element_gradients(mesh, w)
    ref = np.sum(mesh.areas() * trace_form(Hu, Hw, states.B0, states.T0, params.beta, params))
    assert w @ (raw.matrix @ u) == pytest.approx(ref, rel=1e-11)


def test_element_identity(params, rng):
    mesh = rectangle_mesh(1, 1, 2, 2)
    states = random_states(rng, mesh, params)
    Ke, D, area = element_operator(mesh, states, params.beta, params)
    ue = rng.normal(size=(mesh.n_triangles, 6))
    H = (D @ ue[:, :, None]).reshape(-1, 2, 2)
    lhs = np.einsum("ei,eij,ej->e", ue, Ke, ue)
    ref = area * trace_form(H, H, states.B0, states.T0, params.beta, params)
    assert np.allclose(lhs, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_matrix_is_not_symmetric_under_prestress(params, rng):
    mesh = rectangle_mesh(1, 1, 2, 2)
    raw = assemble_raw(mesh, random_states(rng, mesh, params), params.beta, params)
    assert abs(raw.matrix - raw.matrix.T).max() > 1e-6


def test_traction_resultant(params):
    mesh = rectangle_mesh(2.0, 1.0, 4, 2, labels={"bottom": CLAMPED, "right": TRACTION,
                                                  "top": TRACTION, "left": TRACTION})
    f = np.zeros((len(mesh.boundary_edges), 2))
    right = mesh.normals()[:, 0] > 0.5
    f[right] = [0.3, -0.1]
    load = traction_load(mesh, f).reshape(-1, 2)
    assert np.allclose(load.sum(axis=0), [0.3, -0.1])


def test_linear_traction_moment():
    mesh = rectangle_mesh(1.0, 1.0, 1, 1, labels={"bottom": CLAMPED, "right": TRACTION,
                                                  "top": CLAMPED, "left": CLAMPED})
    f = np.zeros((len(mesh.boundary_edges), 2, 2))
    e = np.flatnonzero(mesh.edge_labels == TRACTION)[0]
    i, j = mesh.boundary_edges[e]
    f[e, 0] = [mesh.nodes[i, 1], 0.0]
    f[e, 1] = [mesh.nodes[j, 1], 0.0]  # f_x = y on the right edge
    load = traction_load(mesh, f).reshape(-1, 2)
    assert load[:, 0].sum() == pytest.approx(0.5)
    assert load[:, 0] @ mesh.nodes[:, 1] == pytest.approx(1.0 / 3.0)


def test_traction_wrong_length():
    mesh = rectangle_mesh(1, 1, 1, 1)
    with pytest.raises(MeshError):
        traction_load(mesh, np.zeros((2, 2)))


def test_gravity_resultant():
    params = MaterialParams(s1=1.0, s2=-0.3, beta=10.0, rho0=2.0, gravity=(0.0, -9.81))
    mesh = rectangle_mesh(1.5, 1.0, 3, 3)
    states = QuadPointState.initial(params, n=mesh.n_triangles)
    raw = assemble_raw(mesh, states, params.beta, params, gravity_on=True)
    assert np.allclose(raw.rhs.reshape(-1, 2).sum(axis=0), [0.0, -9.81 * 2.0 * 1.5])


def test_state_count_mismatch(params):
    mesh = rectangle_mesh(1, 1, 1, 1)
    with pytest.raises(MeshError):
        assemble_raw(mesh, QuadPointState.initial(params, n=3), params.beta, params)


def test_constraints_are_exact(params, rng):
    mesh = kite()
    states = QuadPointState.initial(params, n=2)
    dm = build_dofmap(mesh)
    f = np.zeros((len(mesh.boundary_edges), 2))
    prescribed = rng.normal(size=(4, 2))
    system = assemble(mesh, states, params.beta, params, traction=f, dofmap=dm,
                      prescribed=prescribed)
    u = system.expand(rng.normal(size=system.matrix.shape[0]))
    assert abs(u[2] @ dm.normal[2]) <= 1e-15
    clamped = dm.kind == CLAMPED
    assert np.array_equal(u[clamped], prescribed[clamped])


def test_lifting_solves_prescribed_shear(params):
    mesh = rectangle_mesh(1, 1, 3, 3, labels={"bottom": CLAMPED, "top": CLAMPED,
                                              "left": CLAMPED, "right": CLAMPED})
    states = QuadPointState.initial(params, n=mesh.n_triangles)
    G = np.array([[0.0, 0.01], [0.0, 0.0]])
    u = solve(assemble(mesh, states, params.beta, params, prescribed=mesh.nodes @ G.T))
    assert np.allclose(element_gradients(mesh, u), G, atol=1e-12)


def test_smallest_singular_value_two_triangles(params):
    mesh = build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]],
                      [[0, 1, CLAMPED], [1, 2, TRACTION], [2, 3, TRACTION], [3, 0, TRACTION]])
    states = QuadPointState.initial(params, n=2)
    A = assemble(mesh, states, params.beta, params).matrix.toarray()
    assert A.shape == (4, 4)
    assert np.linalg.svd(A, compute_uv=False).min() >= 1e-12


def test_cgnr_agrees_with_lu(rng):
    params = MaterialParams(s1=1.0, s2=-0.4, beta=1.0)
    mesh = rectangle_mesh(1, 1, 4, 4, labels={"bottom": CLAMPED, "right": TRACTION,
                                              "top": TRACTION, "left": TRACTION})
    drawn = None
    while drawn is None:
        drawn = random_certified_points(rng, params, mesh.n_triangles)
    pts, alpha, k = drawn
    B0 = np.zeros((mesh.n_triangles, 2, 2))
    B0[:, 0, 0], B0[:, 1, 1] = pts.gamma1, pts.gamma2
    F = np.sqrt(B0)
    states = QuadPointState(F=F, B0=B0, T0=cauchy_stress(B0, pts.p0, params),
                            p0=np.asarray(pts.p0), rho=1.0 / np.linalg.det(F))
    rep = certify(pts, alpha=alpha, k=k, params=params)
    f = rng.normal(size=(len(mesh.boundary_edges), 2))
    system = assemble(mesh, states, rep.beta0 + 1.0, params, traction=f)
    u_lu = solve(system, method="lu")
    u_cg = solve(system, method="cgnr", max_iter=5000)
    u_gm = solve(system, method="gmres")
    scale = np.abs(u_lu).max()
    assert np.abs(u_cg - u_lu).max() <= 1e-8 * scale
    assert np.abs(u_gm - u_lu).max() <= 1e-8 * scale


def test_solver_failure_is_reported(params):
    n = 3
    A = sp.csr_matrix((n, n))
    dm = build_dofmap(rectangle_mesh(1, 1, 1, 1))
    system = LinearSystem(matrix=A, rhs=np.ones(n), dofmap=dm,
                          prolongation=sp.csr_matrix((2 * dm.n_nodes, n)),
                          lift=np.zeros(2 * dm.n_nodes))
    with pytest.raises(SolverError, match="certify"):
        solve(system, max_iter=5)


def test_unknown_solver_method(params):
    mesh = rectangle_mesh(1, 1, 1, 1)
    system = assemble(mesh, QuadPointState.initial(params, n=4), params.beta, params)
    with pytest.raises(ValueError):
        solve(system, method="qr")
