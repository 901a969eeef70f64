"""
Stopping times and stratification by simulation
===============================================

Stopping at the k-th visit to a set S instead of after a fixed n
steps leaves the scaled variance unchanged in the limit.

Forcing the homogeneous block types to alternate never increases
the variance of a ratio estimator built from block contents.
"""

from nobacktrack import line_walk
from nobacktrack.peskun import lemma1_check, lemma2_check, symmetric_type_chain
from nobacktrack.reproduce import default_block_law

spec = line_walk(5)
rep = lemma1_check(spec.chain, ["1"], spec.f, n=20_000, reps=200, seed=0)
print("stop at k-th visit vs fixed n:", rep.to_dict())

Z, rho = symmetric_type_chain(stay=0.5, cross=0.2)
for same in (False, True):
    rep = lemma2_check(default_block_law(3, same=same), rho, Z, n=2000, reps=500, seed=0)
    label = "Q0 = Q1 control" if same else "distinct Q0, Q1"
    print(f"stratified blocks ({label}): R {rep.old_est:.3f}  R' {rep.new_est:.3f}  z {rep.z:.2f}")
