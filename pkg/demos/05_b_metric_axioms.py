"""
Squared distance is a b-metric
==============================

``|x - y|^2`` breaks the triangle inequality but satisfies the relaxed version
with ``s = 2``. Declaring ``s = 1`` lets the checker produce a witness triple.
"""

from leaderfp import BMetricSpace, SampleSpec, check_metric_axioms

spec = SampleSpec(seed=0, count=10_000)
for s in (2.0, 1.0):
    space = BMetricSpace.interval(-4, 4, metric="power_euclidean", exponent=2.0, coefficient_s=s)
    rep = check_metric_axioms(space, spec)
    print(f"s={s}: {rep.passed}")
    if rep.violations:
        print("  witness:", rep.violations["b_triangle"])
