"""
Meshes, boundary labels and output files
========================================

Generate a labelled rectangle, save and reload it in the native text
format, look at outward normals, and write VTK and CSV snapshots.
"""
import tempfile
from pathlib import Path

import numpy as np

from mooney_sla import edge_normal, load_mesh, rectangle_mesh, write_vtk
from mooney_sla.mesh_io import CLAMPED, SLIP, TRACTION, save_mesh, write_csv

#%%
# Labels: 1 = traction, 2 = slip, 3 = clamped.
mesh = rectangle_mesh(2.0, 1.0, 4, 2, labels={"bottom": CLAMPED, "right": TRACTION,
                                              "top": TRACTION, "left": SLIP})
print(mesh.n_nodes, "nodes,", mesh.n_triangles, "triangles")
print("area:", mesh.areas().sum(), "boundary loop area:", mesh.boundary_area())

#%%
# Normals follow the current coordinates: shear the nodes and the right
# edge normal tilts.
print("right edge normal:", edge_normal(mesh, mesh.edges_with_label(TRACTION)[0]))
sheared = mesh.with_nodes(mesh.nodes @ np.array([[1.0, 0.0], [0.3, 1.0]]))
print("after shear:      ", edge_normal(sheared, sheared.edges_with_label(TRACTION)[0]))

#%%
# Round trip through the text format, then VTK and CSV output.
out = Path(tempfile.mkdtemp())
save_mesh(mesh, out / "rect.txt")
again = load_mesh(out / "rect.txt")
print("round trip equal:", np.array_equal(again.nodes, mesh.nodes))
u = np.zeros_like(mesh.nodes)
write_vtk(mesh, out / "rect.vtk", point_data={"displacement": u},
          cell_data={"T0": np.zeros((mesh.n_triangles, 2, 2))})
write_csv(out / "rect.csv", mesh.nodes, u)
print((out / "rect.vtk").read_text().splitlines()[:5])
