# Splitting each level into functions pulled back from below and genuinely new ones.
import numpy as np

from coversol import new_spectrum_multiset_check, telescope, tower_spectra
from coversol.samples import random_tower, square_tower
from coversol.solenoid import telescope_checks

# the smallest example: C_2 covered by C_4
tower = square_tower()
spectra = tower_spectra(tower)
decomp = telescope(tower, spectra)
print("C_2 spectrum:", np.round(spectra[0].eigenvalues, 12))
print("C_4 spectrum:", np.round(spectra[1].eigenvalues, 12))
print("new at level 2:", np.round(decomp.piece(2).new_eigenvalues, 12))

# a random weighted base with a non-abelian chain
name, tower = random_tower(3)
spectra = tower_spectra(tower)
decomp = telescope(tower, spectra)
print(f"\nrandom tower ({name}), depth {tower.depth}")
for i in range(1, tower.depth + 1):
    p = decomp.piece(i)
    print(f"  level {i}: dim W = {p.dim_w:3d}  dim V = {p.dim_v:3d}")
print(telescope_checks(decomp, tower))

# union of new spectra reproduces the top spectrum as a multiset
for k in range(1, tower.depth + 1):
    print(f"  multiset gap at depth {k}: {new_spectrum_multiset_check(decomp, spectra, k):.2e}")
