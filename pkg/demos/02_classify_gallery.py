"""
Classifying the built-in maps
=============================

Each gallery instance carries a ground-truth list of contraction classes. The
classifier runs the pairwise checks and the (delta, r) searches and reports a
certificate or a witness per class.
"""

from leaderfp.gallery import get_instance, list_instances
from leaderfp.runner import task_classify

for name, summary in list_instances():
    inst = get_instance(name)
    result, problems = task_classify(inst, inst.sample_spec(0, 5_000), {})
    verdicts = ", ".join(f"{c}:{r['verdict'][0]}" for c, r in result["classes"].items())
    print(f"{name:26s} {verdicts}  nonexpansive={result['nonexpansive'].passed}"
          + (f"  MISMATCH {problems}" if problems else ""))

# %%
# A witness can be replayed: the stored pair reproduces its iterate distances.
from leaderfp import search_leader_params

shift = get_instance("translation")
w = search_leader_params(shift.map, 1.0, shift.sample_spec(0, 2_000))
print(w.outcome, w.x, w.y, w.distances[:4], "replays:", w.replay(shift.map))
