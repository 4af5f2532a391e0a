"""How the spending estimator paces label queries to the budget."""

import numpy as np

from siamstream.active import (BudgetState, StrategyState, budget_allows,
                               budget_update, decide)
from siamstream.runner import MethodConfig, run
from siamstream.streams import StreamSpec

# The estimator alone: a decayed counter u over a window of w steps.
# Querying is allowed while u/w stays strictly below the budget.
budget = BudgetState(budget=0.05, window=300)
rng = np.random.default_rng(0)
spent = []
for t in range(2000):
    labelled = budget_allows(budget) and rng.random() < 0.5
    budget = budget_update(budget, labelled)
    spent.append(labelled)
spent = np.array(spent)
print(f"standalone estimator at B=5%: spent {spent.mean():.4f} of all steps, "
      f"b_hat ends at {budget.b_hat:.4f}")

# Inside a full run the same gate throttles the active learner.
spec = StreamSpec("sea", length=4000, capacity=10)
stream = spec.build(11)
for b in (0.01, 0.05, 0.2):
    cfg = MethodConfig("actisiamese", num_classes=10, dim=2, budget=b, seed=11)
    r = run(cfg, stream)
    w = np.convolve(np.diff(r.labels_spent, prepend=0), np.ones(300))[:4000] / 300
    print(f"B={b:<5} spent {int(r.labels_spent[-1]):4d} labels "
          f"({r.labels_spent[-1] / 4000:.4f} of stream), "
          f"peak 300-step window {w.max():.4f}, final G-mean {r.final_gmean:.3f}")

# The randomised threshold theta adapts: queries shrink it, refusals grow it,
# so it settles where about half the eligible steps are taken.
strategy = StrategyState(mode="randomised", theta=1.0, step_size=0.01,
                         spread=1.0, seed=1)
values = np.random.default_rng(2).random(3000)
taken = np.array([decide(strategy, float(v)) for v in values])
print(f"\nrandomised threshold over uniform criterion values: "
      f"query rate {taken.mean():.3f}, theta ends at {strategy.theta:.3f}")
