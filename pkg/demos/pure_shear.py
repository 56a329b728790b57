"""
Pure shear of a square by successive linear steps
=================================================

The top of a unit square is dragged sideways to a shear of 0.2 while the
bottom stays clamped.  With the sides loaded by the simple-shear traction
the exact answer is homogeneous, and the step-size error in the shear
stress halves each time the number of steps doubles.  With free sides the
ends relax and the mean shear stress drops well below the homogeneous value.
"""
from mooney_sla.oracles import pure_shear_oracle
from mooney_sla.sla_driver import pure_shear_config, run

exact = pure_shear_oracle(0.2, pure_shear_config().params()).T12
print("homogeneous T12:", exact)

#%%
for steps in (20, 40, 80):
    fin = run(pure_shear_config(steps=steps)).final_summary()
    print(f"{steps:3d} steps: mean T12 = {fin['mean_T12']:.6f}  "
          f"error = {abs(fin['mean_T12'] - exact):.2e}  "
          f"max|detF-1| = {fin['max_abs_detF_minus_1']:.1e}")

#%%
fin = run(pure_shear_config(sides="free")).final_summary()
print(f"free sides: mean T12 = {fin['mean_T12']:.4f}")
