"""
Riemann problems on a grid flux
===============================

A tour of the scalar and system Riemann solvers for ``burgers_linear``
(``f = u^2/2``, ``a = u - 1``) on the grid ``u in Z/10``.
"""

import math

from tritrack import build_grid_flux, burgers_linear, rh_factor, scalar_riemann, system_riemann, to_Z

m = burgers_linear()
g = build_grid_flux(m, 10)

# A decreasing jump is a single shock.  The endpoints are symmetric so the
# shock does not move.
for j in scalar_riemann(g, 0.3, -0.3):
    print("shock      ", j.kind.value, j.speed)

# An increasing jump opens into a staircase of small contacts, one per grid
# cell, with speeds at the cell midpoints of f'.
for j in scalar_riemann(g, -0.2, 0.2):
    print("rarefaction", j.kind.value, j.speed, (j.u_left, j.u_right))

#%%
# The second field.  ``v`` is carried through ``Z = v exp(A(u))``; across
# the shock ``Z`` jumps by the factor ``r``, and a 2-contact at speed
# ``a(u-)`` absorbs what is left.
left, right = (0.3, 1.0), (-0.3, 1.0)
fan = system_riemann(m, g, (left[0], to_Z(m, *left)), (right[0], to_Z(m, *right)))
for w in fan:
    print(w.kind.value, "speed", w.speed)
v_m = fan.intermediate_Z * math.exp(0.3)
print("v between the waves:", v_m, " (13/7 =", 13 / 7, ")")
print("r across the shock:", rh_factor(m, 0.3, -0.3))

#%%
# ``r - 1`` is tiny for small jumps: it starts at the third power of the
# jump, which is what keeps ``Z`` under control in the interaction estimates.
for d in (0.4, 0.2, 0.1, 0.05):
    r = rh_factor(m, d / 2, -d / 2)
    print(f"jump {d:5.2f}   r - 1 = {r - 1:.3e}   (r - 1)/d^3 = {(r - 1) / d**3:.4f}")
