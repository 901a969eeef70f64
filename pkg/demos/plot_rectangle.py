"""
A constant-factor gain on a rectangle
=====================================

On an N x M grid the walk can still wander sideways after the lift, so the
modified chain only gains a constant factor when estimating the mean column.
"""

from nobacktrack import build_nobacktrack, exact_asymptotic_variance, lift_function, rectangle

for N, M in ((4, 3), (8, 3), (16, 3), (8, 6)):
    spec = rectangle(N, M)
    nb = build_nobacktrack(spec.chain)
    v = exact_asymptotic_variance(spec.chain, spec.f)
    vm = exact_asymptotic_variance(nb.chain, lift_function(spec.f, nb))
    print(f"{N:2d} x {M}:  original {v:10.3f}   modified {vm:10.3f}   ratio {v / vm:.3f}")
