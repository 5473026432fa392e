"""
A convergent orbit whose limit is not fixed
===========================================

``T(0) = 1`` and ``T(x) = x/2`` elsewhere on ``[0, 1]``. Every orbit runs to
0, yet 0 is not a fixed point. The iteration report keeps the two facts apart.
"""

from leaderfp import get_instance, iterate, search_leader_params

inst = get_instance("jachymski_counterexample")
T = inst.map

# %%
# Picard iteration from a few starts. ``converged`` is a windowed Cauchy
# test; ``residual`` is dist(Tz, z) at the rounded limit.
for x0 in (1.0, 0.7, 0.3, 0.01):
    orbit, rep = iterate(T, [x0])
    print(f"x0={x0:<5} iterations={rep.iterations_used:3d} limit={rep.limit_estimate} "
          f"residual={rep.residual} certified={rep.fixed_point_certified}")

# %%
# The map still satisfies the Leader condition at every epsilon we try: pairs
# closer than eps + delta end up closer than eps after r steps.
spec = inst.sample_spec(seed=0, count=10_000)
for eps in (0.1, 0.25, 0.5):
    c = search_leader_params(T, eps, spec)
    print(f"eps={eps}: {c.outcome} delta={c.delta} r={c.r}")
