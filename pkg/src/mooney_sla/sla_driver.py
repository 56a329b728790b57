"""Successive linear approximation (SLA) load stepping.

Each step solves the linearized problem on the current configuration,
evaluates the constant element gradients ``H = grad u``, advances the
element states, and finally moves the nodes by ``u``.  States are updated
before the nodes move, so ``B0`` and the coordinates describe the same
configuration at the start of every step.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .coercivity import certify, spectral_of
from .config import (BoundaryConfig, CertificationConfig, MaterialConfig, MeshConfig,
                     OutputConfig, RunConfig, ScheduleConfig, SolverConfig)
from .constitutive import MaterialParams, QuadPointState, det2, update_state
from .errors import CertificationError, StepTooLargeError
from .fem_assembly import assemble, build_dofmap, solve
from .mesh_io import CLAMPED, write_csv, write_vtk

__all__ = [
    "RunState",
    "DiagnosticsRecord",
    "RunResult",
    "run",
    "step_diagnostics",
    "element_gradients",
    "pure_shear_config",
    "shear_side_stresses",
    "patch_config",
    "equilibrium_config",
]

log = logging.getLogger(__name__)


@dataclass
class RunState:
    mesh: object
    states: QuadPointState
    step: int = 0
    initial_nodes: Optional[np.ndarray] = None
    last_H: Optional[np.ndarray] = None
    last_residual: float = 0.0
    last_report: object = None
    H_history: list = field(default_factory=list)

    @property
    def displacement(self):
        """Total nodal displacement from the initial configuration."""
        return self.mesh.nodes - self.initial_nodes


@dataclass
class DiagnosticsRecord:
    step: int
    max_h_inf: float
    density_drift: float
    max_detF_dev: float
    min_coercivity_margin: Optional[float]
    beta0: Optional[float]
    solver_residual: float

    def to_dict(self):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in self.__dict__.items()}


@dataclass
class RunResult:
    state: RunState
    steps: list
    reports: list
    config: RunConfig

    def final_summary(self):
        s = self.state.states
        detF = det2(s.F)
        T = s.T0
        return {
            "steps": self.state.step,
            "mean_T": T.mean(axis=0).tolist(),
            "mean_T12": float(T[:, 0, 1].mean()),
            "mean_F": s.F.mean(axis=0).tolist(),
            "max_abs_detF_minus_1": float(np.max(np.abs(detF - 1.0))),
            "mean_p0": float(s.p0.mean()),
        }

    def summary(self):
        return {
            "scenario": self.config.schedule.scenario,
            "config": self.config.to_dict(),
            "steps": [d.to_dict() for d in self.steps],
            "coercivity": [r.to_dict() if r is not None else None for r in self.reports],
            "final": self.final_summary(),
        }


def element_gradients(mesh, u):
    """Constant displacement gradient per triangle, ``H[e, i, j] = du_i/dx_j``."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    return np.einsum("eai,eaj->eij", u[mesh.triangles], mesh.gradients())


def _h_inf(H):
    return np.abs(H).sum(axis=-1).max(axis=-1)


def step_diagnostics(state, params=None):
    """Summaries of the small-step premises for a completed step."""
    s = state.states
    detF = det2(s.F)
    rho0 = params.rho0 if params is not None else float((s.rho * detF).mean())
    H = state.last_H
    report = state.last_report
    margin = beta0 = None
    if report is not None:
        margin = report.min_margin
        beta0 = report.beta0
    return DiagnosticsRecord(
        step=state.step,
        max_h_inf=float(_h_inf(H).max()) if H is not None else 0.0,
        density_drift=float(np.mean(np.abs(s.rho * detF / rho0 - 1.0))),
        max_detF_dev=float(np.max(np.abs(detF - 1.0))),
        min_coercivity_margin=margin,
        beta0=beta0,
        solver_residual=float(state.last_residual),
    )


def _certify_state(state, params, cert):
    pts = spectral_of(state.states.B0, state.states.p0, params)
    try:
        return certify(pts, alpha=cert.alpha, k=cert.k, beta_max=cert.beta_max,
                       params=params)
    except CertificationError as exc:
        if cert.mode == "strict":
            raise
        log.warning("step %d: certification failed: %s", state.step + 1, exc)
        return exc.report


def _edge_tractions(mesh, bc, amplitude, step):
    K = len(mesh.boundary_edges)
    f = np.tile(np.asarray(bc.traction, dtype=float), (K, 1))
    if bc.traction_stress is not None:
        f = f + mesh.normals() @ np.asarray(bc.traction_stress, dtype=float).T
    f = amplitude * f
    if bc.traction_stress_table is not None:
        P = np.asarray(bc.traction_stress_table[step - 1], dtype=float)
        f = f + mesh.normals() @ P.T
    return f


def _clamp_values(X0, bc):
    u = np.tile(np.asarray(bc.clamp_offset, dtype=float), (len(X0), 1))
    if bc.clamp_gradient is not None:
        u = u + X0 @ np.asarray(bc.clamp_gradient, dtype=float).T
    return u


def _write_outputs(outdir, state, n, cfg, final):
    out = cfg.output
    tag = f"step_{n:04d}"
    if out.csv_every and (n % out.csv_every == 0 or final):
        write_csv(outdir / f"{tag}.csv", state.mesh.nodes, state.displacement)
    if out.vtk_every and (n % out.vtk_every == 0 or final):
        s = state.states
        write_vtk(state.mesh, outdir / f"{tag}.vtk",
                  point_data={"displacement": state.displacement},
                  cell_data={"F": s.F, "T0": s.T0, "p0": s.p0})


def run(config, mesh=None, base_dir=None, record_history=False):
    """Execute the SLA loop described by ``config``.

    Parameters
    ----------
    config : RunConfig
    mesh : Mesh, optional
        Overrides the mesh section of the configuration.
    base_dir : path, optional
        Directory against which a relative mesh path is resolved.
    record_history : bool
        Keep every step's element gradients in ``RunState.H_history``.

    Raises
    ------
    StepTooLargeError
        If an element gradient exceeds ``solver.h_guard``; raise
        ``schedule.total_steps``.
    SolverError
        If a step system cannot be solved to ``solver.tol``.
    CertificationError
        In ``strict`` certification mode when a step is not certified.
    """
    params = config.params()
    if mesh is None:
        mesh = config.build_mesh(base_dir)
    m = config.material
    states = QuadPointState.initial(params, n=mesh.n_triangles, F=m.F_initial, p0=m.p0_initial)
    state = RunState(mesh=mesh, states=states, initial_nodes=mesh.nodes.copy())
    bc, sched, sol, cert = config.boundary, config.schedule, config.solver, config.certification
    clamp_total = _clamp_values(state.initial_nodes, bc)
    outdir = None
    if config.output.dir is not None:
        outdir = Path(config.output.dir)
        outdir.mkdir(parents=True, exist_ok=True)

    diagnostics, reports = [], []
    for n in range(1, sched.total_steps + 1):
        a_prev, a = sched.amplitude(n - 1), sched.amplitude(n)
        report = None
        if cert.mode != "off":
            report = _certify_state(state, params, cert)
        dofmap = build_dofmap(state.mesh, slip_corners=bc.slip_corners)
        system = assemble(state.mesh, state.states, params.beta, params,
                          traction=_edge_tractions(state.mesh, bc, a, n),
                          gravity_on=sched.gravity_on, dofmap=dofmap,
                          prescribed=(a - a_prev) * clamp_total)
        u, info = solve(system, tol=sol.tol, max_iter=sol.max_iter, method=sol.method,
                        return_info=True)
        H = element_gradients(state.mesh, u)
        worst = float(_h_inf(H).max())
        if worst > sol.h_guard:
            raise StepTooLargeError(
                f"step {n}: max ||H||_inf = {worst:.3g} exceeds the guard {sol.h_guard:g}; "
                "increase schedule.total_steps")
        new_states = update_state(state.states, H, params.beta, params)
        state = RunState(
            mesh=state.mesh.with_nodes(state.mesh.nodes + u),
            states=new_states, step=n, initial_nodes=state.initial_nodes,
            last_H=H, last_residual=info["residual"], last_report=report,
            H_history=state.H_history + [H] if record_history else [],
        )
        rec = step_diagnostics(state, params)
        diagnostics.append(rec)
        reports.append(report)
        log.debug("step %d/%d: max|H|=%.3e residual=%.2e", n, sched.total_steps,
                  rec.max_h_inf, rec.solver_residual)
        if outdir is not None:
            _write_outputs(outdir, state, n, config, n == sched.total_steps)

    result = RunResult(state=state, steps=diagnostics, reports=reports, config=config)
    if outdir is not None:
        (outdir / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    return result


# Ready-made scenarios -------------------------------------------------------

def shear_side_stresses(kappa, steps, params):
    """Nominal side stresses that keep a sheared square homogeneous.

    Step ``n`` takes the shear from ``kappa_{n-1}`` to ``kappa_n`` with the
    linear ramp.  The Cauchy stress of simple shear at pressure
    ``p = s1 + s2`` (the stress-free starting value) is pulled back to the
    step-start configuration: ``P_n = T(kappa_n) (I + H_n)^-T`` with
    ``H_n = [[0, dkappa], [0, 0]]`` and ``det(I + H_n) = 1``.
    """
    from .oracles import pure_shear_oracle

    dk = kappa / steps
    Finv_T = np.array([[1.0, 0.0], [-dk, 1.0]])
    table = []
    for n in range(1, steps + 1):
        sol = pure_shear_oracle(n * dk, params)
        T = sol.stress(params.stress_free_pressure, params)
        table.append((T @ Finv_T).tolist())
    return table


def pure_shear_config(n=16, steps=40, kappa=0.2, s1=1.0, s2=-0.3, beta=1e4, size=1.0,
                      sides="loaded", certification="off", **output):
    """Square with clamped bottom and top, the top dragged to ``kappa * size``.

    ``sides="loaded"`` applies the homogeneous simple-shear traction on the
    lateral edges, so the exact solution is the universal one;
    ``sides="free"`` leaves them traction free (end effects then lower the
    mean shear stress).
    """
    if sides not in ("loaded", "free"):
        raise ValueError("sides must be 'loaded' or 'free'")
    material = MaterialConfig(s1=s1, s2=s2, beta=beta)
    table = None
    if sides == "loaded":
        table = shear_side_stresses(kappa, steps, MaterialParams(s1=s1, s2=s2, beta=beta))
    return RunConfig(
        material=material,
        mesh=MeshConfig(generator={"width": size, "height": size, "nx": n, "ny": n,
                                   "labels": {"bottom": 3, "top": 3, "left": 1, "right": 1}}),
        schedule=ScheduleConfig(total_steps=steps, scenario="pure-shear"),
        boundary=BoundaryConfig(clamp_gradient=[[0.0, kappa], [0.0, 0.0]],
                                traction_stress_table=table),
        certification=CertificationConfig(mode=certification),
        output=OutputConfig(**output),
    )


def patch_config(t=0.1, n=8, width=2.0, height=1.0, s1=1.0, s2=-0.3, beta=100.0, steps=1):
    """Uniaxial traction on a rectangle resting on two sliding edges."""
    return RunConfig(
        material=MaterialConfig(s1=s1, s2=s2, beta=beta),
        mesh=MeshConfig(generator={"width": width, "height": height, "nx": n, "ny": n,
                                   "labels": {"bottom": 2, "left": 2, "right": 1, "top": 1}},
                        require_clamped=False),
        schedule=ScheduleConfig(total_steps=steps, scenario="patch"),
        boundary=BoundaryConfig(traction_stress=[[t, 0.0], [0.0, 0.0]], slip_corners="clamp"),
        certification=CertificationConfig(mode="off"),
    )


def equilibrium_config(n=4, steps=3, s1=1.0, s2=-0.3, beta=100.0):
    """Unloaded, stress-free body: every step must return ``u = 0``."""
    return RunConfig(
        material=MaterialConfig(s1=s1, s2=s2, beta=beta),
        mesh=MeshConfig(generator={"nx": n, "ny": n,
                                   "labels": {"bottom": 3, "top": 1, "left": 1, "right": 1}}),
        schedule=ScheduleConfig(total_steps=steps, scenario="equilibrium"),
        certification=CertificationConfig(mode="off"),
    )
