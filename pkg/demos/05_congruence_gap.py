# Cayley graphs of SL(2, Z/N) over a chain of moduli.
# The first nonzero eigenvalue stays away from zero along the tower.
from coversol import selberg_gap_report
from coversol.solenoid import ANALOG_NOTE

rows = selberg_gap_report(3)
print("level  modulus  vertices  lambda_1      running inf   solver")
for r in rows:
    print(f"{r.level:5d}  {r.modulus:7d}  {r.vertices:8d}  {r.lambda_1:.9f}   "
          f"{r.running_inf:.9f}   {r.solver}")
print(ANALOG_NOTE)
