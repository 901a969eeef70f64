"""
Removing backtracking from a random walk on a line
==================================================

A walk on 1..N that steps left or right with probability 1/2 spends most of
its time retracing its own steps.  Lifting it to pairs (previous, current)
and updating with Liu's modified Gibbs kernel turns it into a walk that only
reverses at the ends.
"""

import numpy as np

from nobacktrack import build_nobacktrack, exact_asymptotic_variance, lift_function, line_walk, simulate_nobacktrack

# the original walk and its no-backtracking modification
spec = line_walk(5)
nb = build_nobacktrack(spec.chain)
print(f"{spec.chain.n} states lift to {nb.chain.n} pair-states")

# every row of the modified matrix has a single 1: the walk is deterministic
print("deterministic:", bool(np.all(np.isin(nb.chain.T, (0.0, 1.0)))))

traj = simulate_nobacktrack(spec.chain, 12, start=("1", "2"), seed=0)
print("second component:", [spec.chain.states[nb.second[s]] for s in traj.states])

# exact asymptotic variance of the time average of x, before and after
f = spec.f
print("V original :", exact_asymptotic_variance(spec.chain, f))
print("V modified :", exact_asymptotic_variance(nb.chain, lift_function(f, nb)))

# growth with N: the original variance grows polynomially, the modified stays at 0
for N in (8, 16, 32, 64):
    s = line_walk(N)
    m = build_nobacktrack(s.chain)
    v = exact_asymptotic_variance(s.chain, s.f / N)
    vm = exact_asymptotic_variance(m.chain, lift_function(s.f / N, m))
    print(f"N={N:3d}  V(x/N)={v:10.4f}  modified={vm:.1e}")
