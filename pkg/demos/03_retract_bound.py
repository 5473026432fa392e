"""
An a-priori iteration count
===========================

From a control function we can compute how many steps are enough to bring any
start in ``B(z, K)`` into ``B(z, eps)``, then compare against sampled orbits.
"""

from leaderfp import (
    ControlSequence,
    SampleSpec,
    get_instance,
    invariance_index_constructive,
    invariance_index_empirical,
    retract_bound,
    uniform_entry_profile,
    verify_retract_bound,
    verify_uniform_convergence,
)

inst = get_instance("banach_half")
phi = inst.phi
bound = retract_bound(phi, ControlSequence.constant(phi), epsilon=0.1, K=1.0)
print({k: bound.to_dict()[k] for k in ("f_min", "delta", "m2", "p", "m")})

# %%
# The bound is loose: sampled starts need at most 4 steps.
spec = SampleSpec(0, 1_000, anchors=((0.999999,),))
print(verify_retract_bound(inst.map, [0.0], bound, spec))

# %%
# Composing with the invariance index of B(z, eps) gives a point after which
# every orbit stays inside.
inv = invariance_index_empirical(inst.map, [0.0], 0.1, spec)
print(verify_uniform_convergence(inst.map, [0.0], 0.1, 1.0, bound, inv, spec))
print(uniform_entry_profile(inst.map, [0.0], 1.0, 0.1, spec).to_dict())

# %%
# With a slowly converging family the constructive invariance index grows.
kv = get_instance("kirk_varying")
print(invariance_index_constructive(kv.phi_seq.limit, kv.phi_seq, 0.1, 1.0))
