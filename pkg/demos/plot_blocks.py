"""
Delta transitions, blocks and stratification
============================================

Run the counterexample pair on a shared stream of uniforms.  They agree
except on "delta" transitions out of A and B, which cut each run into
blocks.  In the new chain the homogeneous blocks (AA, BB) strictly
alternate, so their counts never differ by more than one.
"""

from nobacktrack import block_statistics, delta_coupled_simulate, elementary_pair, peskun_counterexample, segment_blocks

old, new = peskun_counterexample()
pair = elementary_pair(old.chain, new.chain, old.dist)
a, b = delta_coupled_simulate(pair, 200_000, seed=1)

for name, traj in (("old", a), ("new", b)):
    trace = segment_blocks(traj, old.f, pair, name)
    s = block_statistics(trace)
    counts = {t: s[t]["count"] for t in ("AA", "AB", "BA", "BB")}
    print(name, counts, "N_AA - N_BB =", s["AA-BB"]["count_diff"])

# per-block contents: AB blocks always pass through top, BA through bottom
print(trace.to_csv().splitlines()[:6])
