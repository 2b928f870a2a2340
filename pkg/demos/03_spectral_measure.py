# Projection-valued measure assembled from the telescoped pieces.
import numpy as np

from coversol import (IntervalSet, SpectralMeasureTrunc, direct_resolution, pvm_axioms_check,
                      telescope, tower_spectra)
from coversol.samples import loop_tower

tower = loop_tower(3)
spectra = tower_spectra(tower)
decomp = telescope(tower, spectra)
E = SpectralMeasureTrunc(tower, decomp, depth=3)

omega = IntervalSet([(0.5, 1.5), (3.5, 5.0)])
P = E.operator(omega)
print("rank of E(omega):", round(np.trace(P).real))
print("distance to the direct projector:",
      f"{np.linalg.norm(P - direct_resolution(spectra[-1], omega)):.2e}")

# functional calculus: heat kernel at t = 1
heat = E.integrate(lambda lam: np.exp(-lam))
print("trace of exp(-L):", f"{np.trace(heat).real:.6f}",
      " direct:", f"{np.exp(-spectra[-1].eigenvalues).sum():.6f}")

print(pvm_axioms_check(E, trials=10))
