"""Run configuration: dataclasses plus strict JSON loading.

Unknown keys are rejected at every level so that typos cannot silently fall
back to defaults.  Example document::

    {
      "material": {"s1": 1.0, "s2": -0.3, "beta": 1e4, "rho0": 1.0},
      "gravity": [0.0, 0.0],
      "mesh": {"generator": {"width": 1, "height": 1, "nx": 16, "ny": 16,
                             "labels": {"bottom": 3, "top": 3, "left": 1, "right": 1}}},
      "schedule": {"total_steps": 40, "scenario": "pure-shear"},
      "boundary": {"clamp_gradient": [[0, 0.2], [0, 0]]},
      "solver": {"tol": 1e-10},
      "certification": {"mode": "warn"},
      "output": {"dir": "out", "csv_every": 1}
    }
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .constitutive import MaterialParams
from .errors import ParameterError
from .mesh_io import load_mesh, rectangle_mesh

__all__ = [
    "MaterialConfig",
    "MeshConfig",
    "ScheduleConfig",
    "BoundaryConfig",
    "SolverConfig",
    "CertificationConfig",
    "OutputConfig",
    "RunConfig",
    "load_config",
]


@dataclass
class MaterialConfig:
    s1: float
    s2: float
    beta: float
    rho0: float = 1.0
    p0_initial: Optional[float] = None
    F_initial: Optional[list] = None


@dataclass
class MeshConfig:
    path: Optional[str] = None
    generator: Optional[dict] = None
    require_clamped: bool = True


@dataclass
class ScheduleConfig:
    total_steps: int = 1
    ramp: Optional[list] = None
    scenario: Optional[str] = None
    gravity_on: bool = False

    def amplitude(self, step):
        """Load factor after ``step`` steps (0 at the start)."""
        if step == 0:
            return 0.0
        if self.ramp is not None:
            return float(self.ramp[step - 1])
        return step / self.total_steps


@dataclass
class BoundaryConfig:
    """Final boundary data, scaled by the schedule amplitude.

    Traction edges receive ``traction + traction_stress @ n``.  Clamped
    nodes receive ``offset + gradient @ X`` with ``X`` the initial
    coordinates.  ``slip_corners`` is ``"error"`` or ``"clamp"``.

    ``traction_stress_table`` (one 2x2 per step, not scaled by the ramp)
    adds ``P_n @ n`` at step ``n``, with ``n`` the outward normal at the
    start of the step; ``P_n`` is a nominal stress relative to that
    configuration.  It lets nonlinear load paths be prescribed exactly.
    """

    traction: list = field(default_factory=lambda: [0.0, 0.0])
    traction_stress: Optional[list] = None
    traction_stress_table: Optional[list] = None
    clamp_offset: list = field(default_factory=lambda: [0.0, 0.0])
    clamp_gradient: Optional[list] = None
    slip_corners: str = "error"


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 1000
    method: str = "lu"
    h_guard: float = 0.2


@dataclass
class CertificationConfig:
    mode: str = "warn"
    alpha: Optional[float] = None
    k: Optional[float] = None
    beta_max: float = 1e8


@dataclass
class OutputConfig:
    dir: Optional[str] = None
    vtk_every: int = 0
    csv_every: int = 1


@dataclass
class RunConfig:
    material: MaterialConfig
    gravity: list = field(default_factory=lambda: [0.0, 0.0])
    mesh: MeshConfig = field(default_factory=MeshConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    certification: CertificationConfig = field(default_factory=CertificationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.params()
        s = self.schedule
        if int(s.total_steps) != s.total_steps or s.total_steps < 1:
            raise ParameterError("schedule.total_steps must be an integer >= 1")
        if s.ramp is not None:
            if len(s.ramp) != s.total_steps:
                raise ParameterError("schedule.ramp needs one amplitude per step")
            if not all(np.isfinite(s.ramp)):
                raise ParameterError("schedule.ramp amplitudes must be finite")
        if not 0 < self.solver.tol < 1:
            raise ParameterError("solver.tol must lie in (0, 1)")
        if self.solver.method not in ("lu", "gmres", "cgnr"):
            raise ParameterError("solver.method must be lu, gmres or cgnr")
        if self.certification.mode not in ("off", "warn", "strict"):
            raise ParameterError("certification.mode must be off, warn or strict")
        if self.boundary.slip_corners not in ("error", "clamp"):
            raise ParameterError("boundary.slip_corners must be error or clamp")
        if (self.mesh.path is None) == (self.mesh.generator is None):
            raise ParameterError("mesh needs exactly one of 'path' or 'generator'")
        for name, shape in (("traction", (2,)), ("traction_stress", (2, 2)),
                            ("clamp_offset", (2,)), ("clamp_gradient", (2, 2))):
            val = getattr(self.boundary, name)
            if val is not None and np.shape(val) != shape:
                raise ParameterError(f"boundary.{name} must have shape {shape}")
        table = self.boundary.traction_stress_table
        if table is not None and np.shape(table) != (s.total_steps, 2, 2):
            raise ParameterError("boundary.traction_stress_table needs one 2x2 per step")
        if self.material.F_initial is not None and np.shape(self.material.F_initial) != (2, 2):
            raise ParameterError("material.F_initial must be 2x2")

    def params(self):
        m = self.material
        return MaterialParams(s1=m.s1, s2=m.s2, beta=m.beta, rho0=m.rho0,
                              gravity=tuple(self.gravity))

    def build_mesh(self, base_dir=None):
        if self.mesh.path is not None:
            path = Path(self.mesh.path)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_mesh(path, require_clamped=self.mesh.require_clamped)
        gen = dict(self.mesh.generator)
        kind = gen.pop("kind", "rectangle")
        if kind != "rectangle":
            raise ParameterError(f"unknown mesh generator {kind!r}")
        return rectangle_mesh(require_clamped=self.mesh.require_clamped, **gen)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "config")


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ParameterError(f"{where} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ParameterError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        sub = _NESTED.get((cls, name))
        kwargs[name] = _build(sub, value, f"{where}.{name}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParameterError(f"{where}: {exc}") from None


_NESTED = {
    (RunConfig, "material"): MaterialConfig,
    (RunConfig, "mesh"): MeshConfig,
    (RunConfig, "schedule"): ScheduleConfig,
    (RunConfig, "boundary"): BoundaryConfig,
    (RunConfig, "solver"): SolverConfig,
    (RunConfig, "certification"): CertificationConfig,
    (RunConfig, "output"): OutputConfig,
}


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(data)
