"""
How flat is the Rankine-Hugoniot factor?
========================================

``r - 1`` vanishes to third order in the jump for both registered models,
but the cubic coefficient depends on where the jump sits.
"""

from tritrack import burgers_linear, cubic_shifted, rh_factor
from tritrack.analysis import cubic_flatness_scan

burgers = cubic_flatness_scan(burgers_linear(), 60, constant_target=2 / 3)
print("burgers_linear: exponent", burgers.exponent, "constant", burgers.constant)

#%%
# For ``cubic_shifted`` the jump centred at 0 is special: the cubic term of
# ``r - 1`` cancels there and what remains is of much higher order, small
# enough to underflow against 1 for small jumps.
m = cubic_shifted()
for b in (0.1, 0.03, 0.01, 0.003):
    print(f"b={b:6.3f}  r(b, -b) - 1 = {rh_factor(m, b, -b) - 1: .3e}")
sym = cubic_flatness_scan(m, 60)
print("centred fit: exponent", sym.exponent, "points lost to underflow", sym.extra["zero_points"])

#%%
# Away from the symmetric point the third power is back.
off = cubic_flatness_scan(m, 60, center=0.3)
print("centred at 0.3: exponent", off.exponent, "constant", off.constant)
