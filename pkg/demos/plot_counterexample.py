"""
Peskun ordering needs reversibility
===================================

Two non-reversible chains on A -> top -> B -> bottom share the invariant
distribution (1/3, 1/6, 1/3, 1/6).  The second moves probability off the
diagonal, which would never hurt a reversible chain, yet here it takes the
asymptotic variance from zero to 1/6.
"""

import numpy as np

from nobacktrack import exact_asymptotic_variance, peskun_counterexample, simulate

old, new = peskun_counterexample(delta=0.5)
print("old T:\n", old.chain.T)
print("new T:\n", new.chain.T)
print("V old:", exact_asymptotic_variance(old.chain, old.f))
print("V new:", exact_asymptotic_variance(new.chain, new.f))

# the old chain visits top and bottom alternately, so its running mean of
# f = (0, 1, 0, -1) never strays further than 1/n from 0
traj = simulate(old.chain, 10_000, seed=0, init="A")
n = np.arange(1, 10_001)
err = np.abs(np.cumsum(old.f[traj.states]) / n)
print("max n |mu_n|:", float(np.max(n * err)))
