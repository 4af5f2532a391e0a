"""Tour of the synthetic stream generators and their drift variants."""

import numpy as np

from siamstream.streams import (SEA_RHO, SEA_RHO_DRIFTED, DriftSchedule,
                                ImbalanceSpec, StreamSpec, class_of_sea,
                                make_concept, make_stream)

# one concept of each family
for name in ("sea", "circles", "blobs"):
    c = make_concept(name, drifted=False)
    print(f"{name}: {c.num_classes} classes, {c.dim} features")

# a balanced stationary sea stream
stream = make_stream("sea", length=3000, seed=7)
ys = np.array([inst.y for inst in stream.instances])
print("\nstationary sea, class frequencies:")
print(np.round(np.bincount(ys, minlength=11)[1:] / ys.size, 3))
print(f"seed set D holds {len(stream.seed_data)} labelled examples "
      f"({stream.num_classes} classes x 10)")

# abrupt drift: the band boundaries move at the change step
drift = DriftSchedule("abrupt", change_step=1500)
drifted = make_stream("sea", length=3000, seed=7, drift=drift)
before = drifted.instances[:1500]
after = drifted.instances[1500:]
agree_before = np.mean([class_of_sea(SEA_RHO, i.x) == i.y for i in before])
agree_after = np.mean([class_of_sea(SEA_RHO_DRIFTED, i.x) == i.y for i in after])
print(f"\nabrupt drift at t=1500: initial concept explains {agree_before:.0%} "
      f"of the first half, drifted concept explains {agree_after:.0%} of the second")

# recurrent drift alternates between the two concepts every period
sched = DriftSchedule("recurrent", change_step=1000, period=500)
print("\nrecurrent schedule, concept index by step:",
      {t: sched.concept_index(t) for t in (1, 999, 1000, 1499, 1500, 2000)})

# multi-minority imbalance: one majority class, everything else rare
imb = ImbalanceSpec(minority_prob=0.01, majority_class=1)
rare = make_stream("sea", length=5000, seed=7, imbalance=imb)
ys = np.array([inst.y for inst in rare.instances])
freq = np.bincount(ys, minlength=11)[1:] / ys.size
print(f"\nimbalanced stream: majority class 1 at {freq[0]:.3f}, "
      f"minorities around {freq[1:].mean():.4f}")
print("prior used:", np.round(imb.prior(10), 3))

# the same recipe object rebuilds the identical stream from a seed
spec = StreamSpec("circles", length=2000, drift=DriftSchedule("abrupt", 1000))
a = spec.build(3)
b = spec.build(3)
same = all(np.array_equal(p.x, q.x) and p.y == q.y
           for p, q in zip(a.instances, b.instances))
print(f"\nStreamSpec rebuild with the same seed is identical: {same}")
