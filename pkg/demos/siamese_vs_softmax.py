"""Learning speed: similarity-based prediction vs a softmax net, same labels."""

import numpy as np

from siamstream.runner import MethodConfig, run
from siamstream.streams import StreamSpec

# All methods see the same stream and the same 1% budget. The siamese
# learner squeezes far more out of the early labels because every queue
# pair becomes a training example.
spec = StreamSpec("sea", length=4000, capacity=10)
stream = spec.build(5)

checkpoints = (500, 1000, 2000, 4000)
print(f"{'method':14s}" + "".join(f"  t={t:<6d}" for t in checkpoints) + "  labels")
for method in ("rvus", "actiq", "rvss", "actisiamese"):
    cfg = MethodConfig(method, num_classes=10, dim=2, budget=0.01, seed=5)
    r = run(cfg, stream)
    cells = "".join(f"  {r.gmean[t - 1]:.3f}   " for t in checkpoints)
    print(f"{method:14s}{cells}  {int(r.labels_spent[-1])}")

# rvus has no memory: with so few labels its G-mean stays at zero since
# several classes are never predicted correctly. actiq and rvss share the
# memory but train a plain classifier on it. actisiamese turns the same
# memory into hundreds of similarity pairs per training call.
