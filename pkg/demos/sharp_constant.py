"""The tip value of the comb Bellman function, three ways.

Prints the closed-form value at the vertex (0, eps^2), the exponential
average of the geometric extremal step function, and a brute term-by-term
sum.  Then lets the lattice step shrink to show the classical constant
2 e^{-1/2} appearing, and pushes mu past the critical exponent.
"""

import math

from weakbmo import BellmanEvaluator, CombDomain, ExtremalSpec, exp_average, mu_critical
from weakbmo.extremal import divergence_index
from weakbmo.oracles import series_vertex_value

lam, eps, mu = 1.0, 1.0, 0.5
ev = BellmanEvaluator(CombDomain(lam, eps), mu)
spec = ExtremalSpec(lam, eps)
brute, rest = series_vertex_value(lam, eps, mu)
print(f"closed form      {ev.vertex_value(0):.17g}")
print(f"extremal average {exp_average(spec, mu).value:.17g}  ({spec.n_pieces} pieces + geometric rest)")
print(f"term by term     {brute:.17g}  (neglected <= {rest:.1e})")

print("\nshrinking the lattice at eps = 0.5, mu = 1:")
target = 2 * math.exp(-0.5)
for k in range(0, 11, 2):
    step = 2.0**-k
    v = BellmanEvaluator(CombDomain(step, 0.5), 1.0).vertex_value(0)
    print(f"  lambda = 2^-{k:<2d}  value {v:.10f}  gap {v - target:.2e}")

mstar = mu_critical(lam, eps)
print(f"\ncritical exponent at (1, 1): {mstar:.17g}")
print(f"at 1.01 mu* the partial sums pass 1e6 after {divergence_index(spec, 1.01 * mstar)} terms")
