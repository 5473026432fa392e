"""
Right upper semicontinuity is enough
====================================

The limit control ``phi(t) = t/2`` for ``t < 1`` and ``5t/12`` from 1 on drops
at ``t = 1``. It is upper semicontinuous from the right but not two-sided.
"""

from leaderfp import gap_infimum, get_instance, right_usc_probe, search_leader_params, usc_probe

inst = get_instance("right_usc_jump")
phi = inst.phi_seq.limit

r = right_usc_probe(phi, 1.0)
u = usc_probe(phi, 1.0)
print(f"right probe: {r.verdict} (limsup {r.limsup_estimate:.6f}, phi(1) {r.value_at_t:.6f})")
print(f"two-sided:   {u.verdict} (limsup {u.limsup_estimate:.6f})")

# %%
# t - phi(t) stays bounded away from zero, which is what the bounds need.
print(gap_infimum(phi, 0.5, 4.0).infimum_estimate)

# %%
# And the Leader search succeeds across the standard epsilon grid.
spec = inst.sample_spec(0, 10_000)
for eps in inst.epsilon_grid():
    c = search_leader_params(inst.map, eps, spec)
    print(eps, c.outcome, getattr(c, "r", None))
