"""
Regenerate the JSON run configurations in ``configs/``
=======================================================

The pure-shear file embeds a per-step table of side stresses, so it is
easier to produce from :func:`mooney_sla.sla_driver.pure_shear_config` than
to write by hand.
"""
import json
from pathlib import Path

from mooney_sla.sla_driver import equilibrium_config, patch_config, pure_shear_config

here = Path(__file__).resolve().parent / "configs"
here.mkdir(exist_ok=True)


def dump(name, cfg, drop_none=True):
    d = cfg.to_dict()
    if drop_none:
        d = {sec: ({k: v for k, v in val.items() if v is not None} if isinstance(val, dict) else val)
             for sec, val in d.items()}
    (here / name).write_text(json.dumps(d, indent=2) + "\n")
    print("wrote", here / name)


#%%
# Pure shear of a unit square: 16x16 mesh, shear 0.2 in 40 steps.  The
# sides carry the traction of homogeneous simple shear.
dump("pure_shear.json", pure_shear_config(dir="out/pure_shear", vtk_every=40))

#%%
# Same square with traction-free sides.
dump("pure_shear_free_sides.json",
     pure_shear_config(sides="free", dir="out/pure_shear_free_sides"))

#%%
# Uniaxial patch test and the trivial unloaded run.
cfg = patch_config()
cfg.output.dir = "out/patch"
dump("patch.json", cfg)
cfg = equilibrium_config()
cfg.output.dir = "out/equilibrium"
dump("equilibrium.json", cfg)

#%%
# Certification inputs: a pre-stretched state with B0 = diag(4, 0.25) and
# p0 = -0.7 that certifies, and the same material at p0 = 3 that does not.
base = {
    "material": {"s1": 1.0, "s2": 0.0, "beta": 10.0, "p0_initial": -0.7,
                 "F_initial": [[2.0, 0.0], [0.0, 0.5]]},
    "mesh": {"generator": {"nx": 2, "ny": 2}},
    "certification": {"mode": "warn", "alpha": 0.1, "k": 0.5},
}
(here / "certify_prestretched.json").write_text(json.dumps(base, indent=2) + "\n")
gap = {
    "material": {"s1": 1.0, "s2": 0.0, "beta": 10.0, "p0_initial": 3.0},
    "mesh": {"generator": {"nx": 2, "ny": 2}},
    "certification": {"alpha": 0.1, "k": 0.5},
}
(here / "certify_gap_violation.json").write_text(json.dumps(gap, indent=2) + "\n")
print("wrote certification configs")
