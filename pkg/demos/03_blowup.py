"""
Unbounded growth of v from data with small fractional variation
===============================================================

Blocks of height ``b_n = (n + 26)^(-1/3)`` and width ``2^-n`` pile up
towards ``x = 1``.  The characteristic of the second field starting at
``x = 1`` crosses every block's stationary shock before any blocks
interact, picking up a factor ``(1 + b)/(1 - b) e^(-2b) > 1`` each time.
"""

import math

from tritrack.analysis import (
    blowup_growth_fit,
    blowup_ratio_product,
    blowup_wft_crosscheck,
    build_blowup_data,
    bvs_partial_sums,
)
from tritrack.pcfn import tvs

d = build_blowup_data(4)
print("breakpoints:", d.u0.breakpoints)
print("values:     ", d.u0.values)
print("first interaction times T_n:", d.T, " margin over 1 - x_n:", d.min_margin)

#%%
# The product of factors grows like (N + 26)^(2/3): the logs sum to a
# harmonic series.
for N in (1, 10, 10**3, 10**6):
    Z, logZ = blowup_ratio_product(N)
    print(f"N={N:>8d}  Z={Z:10.5f}  log Z - (2/3) ln(N+26) = {logZ - 2 / 3 * math.log(N + 26):.5f}")
rep = blowup_growth_fit()
print("fitted slope", rep.exponent, "monotone", rep.extra["monotone"])

#%%
# The front tracking engine reproduces the product exactly when the block
# heights are rounded to its grid.
for N in (1, 3, 6):
    cc = blowup_wft_crosscheck(N, 810)
    print(f"N={N}: traced shock product {cc.shock_product:.15f}  oracle {cc.oracle_product:.15f}"
          f"  rel {cc.rel_error:.1e}  interactions {cc.interactions}")

#%%
# The data sit on the edge of BV^{1/3}: the cubic sum of the jumps diverges
# like 8 ln N while the quartic sum converges.
for N in (10, 100, 1000, 10000):
    u = build_blowup_data(N).u0
    print(f"N={N:>6d}  sum (2b)^3 = {bvs_partial_sums(N, 3):8.3f}  TV^1/3 = {tvs(u, 1/3)[0]:8.3f}"
          f"  TV^1/4 = {tvs(u, 0.25)[0]:8.4f}")
