# Dyadic frequency shells: partition of unity, block norms, Besov
# scales, and the Bernstein ratios that tie shells to derivatives.

import numpy as np

from blab import (BesovIndex, Field, Grid, bernstein_check, besov_norm,
                  build_partition, dyadic_block, fractional_laplacian,
                  lebesgue_norm, low_pass, random_field)

g = Grid(128)
part = build_partition(g)
print("shells on n=128:", list(part.shells()))

# The shell multipliers sum to exactly 1 on every lattice point, so a
# field is recovered by summing its blocks.
total = sum(part.multiplier(q) for q in part.shells())
print("partition sum deviation:", np.abs(total - 1.0).max())

f = random_field(g, slope=-1.5, seed=42)
blocks = [dyadic_block(f, q, part) for q in part.shells()]
recon = np.sum([b.values for b in blocks], axis=0)
print("block-sum reconstruction err:", np.abs(recon - f.values).max())

# Energy ledger by shell. The -1.5 spectral slope shows up as a steady
# decay of the block L2 norms past the forcing band.
print("\n q   ||Delta_q f||_2")
for q, b in zip(part.shells(), blocks):
    print(f"{q:2d}   {lebesgue_norm(b, 2.0):.6e}")

# Besov norms weight that ledger by 2^(qs). At s = 0, r = 2 the result
# is comparable to L2; raising s emphasizes the small scales.
for s in (0.0, 0.5, 1.0):
    idx = BesovIndex(s=s, p=2.0, r=2.0)
    print(f"B^{s}_{{2,2}} norm:", f"{besov_norm(f, idx, part):.6f}")
print("L2 norm:      ", f"{lebesgue_norm(f, 2.0):.6f}")

# One derivative should cost a factor ~2^q on shell q. bernstein_check
# measures ||D^k Delta_q f||_a / (2^(qk) 2^(q(2/a - 2/b)) ||Delta_q f||_b)
# which stays order one across shells.
print("\n q   Bernstein block ratio (k=1, a=b=2)")
for q in range(0, part.q_max):
    rep = bernstein_check(f, q, k=1, a=2.0, b=2.0, part=part)
    print(f"{q:2d}   {rep.block_ratio:.4f}   degenerate={rep.degenerate}")

# low_pass(f, q) keeps blocks -1 .. q-1; what it discards is exactly
# the sum of the remaining blocks.
cutoff = 3
tail = f.values - low_pass(f, cutoff, part).values
tail_direct = np.sum([b.values for q, b in zip(part.shells(), blocks)
                      if q >= cutoff], axis=0)
print("\nlow_pass tail consistency:", np.abs(tail - tail_direct).max())

# Blocks nearly diagonalize |D|: on shell q the operator weighs about
# 2^q, the Bernstein picture again.
for q in (1, 2, 3):
    b = dyadic_block(f, q, part)
    ratio = lebesgue_norm(fractional_laplacian(b, 1.0), 2.0) \
        / (2.0 ** q * lebesgue_norm(b, 2.0))
    print(f"|||D| Delta_{q} f|| / 2^{q} ||Delta_{q} f|| = {ratio:.4f}")
