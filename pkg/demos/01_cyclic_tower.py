# A single loop covered by cyclic groups of order 2, 6, 12.
# Each level is a cycle graph; deck transformations are rotations.
import numpy as np

from coversol import check_covering, check_principal, laplacian, eigendecompose
from coversol.samples import loop_tower

tower = loop_tower(3)
for i in range(1, tower.depth + 1):
    lvl = tower.level(i)
    print(f"level {i}: {lvl.vertex_count} vertices, group order {tower.order(i)}")
    print("  covering checks:", check_covering(tower, i).passed,
          " principal:", check_principal(tower, i).passed)

# the projection from level 3 to level 1 folds 12 vertices onto 2
print("down map 3 -> 1:", tower.down_map(3, 1))

# spectra of cycles: 2 - 2 cos(2 pi j / n)
for i in range(1, tower.depth + 1):
    spec = eigendecompose(laplacian(tower, i))
    n = tower.level(i).vertex_count
    ref = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(n) / n))
    print(f"level {i} eigenvalues", np.round(spec.eigenvalues, 6),
          " max error vs cosine formula", f"{np.abs(spec.eigenvalues - ref).max():.1e}")
