"""Bellman induction on a random member function and on the extremal.

Each generation splits every mixed interval so that the chord between the
two child averages stays outside the hull of the rays.  The Bellman sums
B_k can only go down, and they end on the exponential average of the
function.  For the extremal the whole chain is nearly flat.
"""

import numpy as np

from weakbmo import BellmanEvaluator, CombDomain, ExtremalSpec, StepFunction, build
from weakbmo.splitting import verify_main_inequality

d = CombDomain(1.0, 1.0)
ev = BellmanEvaluator(d, 0.5)
rng = np.random.default_rng(2)

while True:
    f = StepFunction(rng.dirichlet(np.ones(5)), rng.normal(0, 0.6, 5))
    rep = verify_main_inequality(f, d, ev)
    if rep.verdict != "SKIPPED":
        break

print("random function:", ", ".join(f"{v:+.3f}" for v in f.values))
print(f"weak BMO {rep.weak_bmo:.4f}, mean point {tuple(round(c, 4) for c in rep.mean)}")
B = rep.trace.B
print("B_k:", " ".join(f"{b:.6f}" for b in B[:6]), "..." if len(B) > 6 else "")
print(f"<exp(mu phi)> = {rep.exp_average:.10f} <= B(mean) = {rep.bellman_value:.10f}  [{rep.verdict}]")

ext = verify_main_inequality(build(ExtremalSpec(1.0, 1.0)), d, ev)
print(f"\nextremal: margin {ext.margin:.2e} after {ext.trace.splits} splits [{ext.verdict}]")
