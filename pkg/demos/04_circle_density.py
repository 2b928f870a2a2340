# Finite cycles of growing circumference approximate the circle.
# New frequencies fill [0, lambda_max] and the largest gap shrinks.
from coversol import circle_tower_analytic, density_report

for depth in (1, 3, 5, 7):
    spec = circle_tower_analytic(depth, 40.0)
    rep = density_report(spec, 40.0, 0.1)
    ell = spec.diagnostics["circumferences"][-1]
    print(f"depth {depth}: circumference {ell:4d}  points {rep['points_in_window']:5d}  "
          f"max gap {rep['max_gap']:.4f}  0.1-dense {rep['dense']}")
