"""Label querying strategy and budget accounting.

The strategy compares an informativeness value v in [0, 1] against an
adaptive threshold. In "randomised" mode the threshold is jittered per
decision by a normal factor so that confident regions are still sampled
occasionally, and it shrinks after a query and grows after a skip. In
"fixed" mode the threshold never moves.

Spending is tracked with an exponentially faded counter that approximates
the fraction of queried labels over a sliding window of w steps. Querying
is allowed only while the estimate is strictly below the budget. The decay
runs every step whether or not a label was bought.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

THETA_MIN = 1e-4
THETA_MAX = 1.0

RANDOMISED = "randomised"
FIXED = "fixed"


@dataclass
class StrategyState:
    mode: str = RANDOMISED
    theta: float = 1.0
    step_size: float = 0.01
    spread: float = 1.0
    seed: int | None = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in (RANDOMISED, FIXED):
            raise ConfigurationError(f"unknown strategy mode {self.mode!r}")
        if not THETA_MIN <= self.theta <= THETA_MAX:
            raise ConfigurationError(f"theta must start in [{THETA_MIN}, {THETA_MAX}]")
        if not 0.0 < self.step_size < 1.0:
            raise ConfigurationError(f"step_size must lie in (0, 1), got {self.step_size}")
        if self.spread < 0.0:
            raise ConfigurationError(f"spread must be non-negative, got {self.spread}")
        self.rng = np.random.default_rng(self.seed)


def decide(strategy: StrategyState, v: float) -> bool:
    """Decide whether to buy the label for an example with informativeness `v`.

    Randomised mode jitters the threshold and then adapts it: down after a
    query, up after a skip, clamped to [THETA_MIN, THETA_MAX]. Fixed mode
    compares against the threshold as-is and never adapts.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"informativeness must lie in [0, 1], got {v}")
    if strategy.mode == FIXED:
        return v < strategy.theta
    eta = strategy.rng.normal(1.0, strategy.spread)
    if eta < 0.0:
        eta = 0.0
    query = v < strategy.theta * eta
    if query:
        strategy.theta *= 1.0 - strategy.step_size
    else:
        strategy.theta *= 1.0 + strategy.step_size
    strategy.theta = min(max(strategy.theta, THETA_MIN), THETA_MAX)
    return query


@dataclass
class BudgetState:
    """Faded estimate of label spending against a budget B over window w."""

    budget: float
    window: int = 300
    u_hat: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.budget <= 1.0:
            raise ConfigurationError(f"budget must lie in [0, 1], got {self.budget}")
        if self.window < 1:
            raise ConfigurationError(f"window must be positive, got {self.window}")

    @property
    def decay(self) -> float:
        return (self.window - 1.0) / self.window

    @property
    def b_hat(self) -> float:
        return self.u_hat / self.window


def budget_allows(budget: BudgetState) -> bool:
    """True while the spending estimate is strictly below the budget."""
    return budget.b_hat < budget.budget


def budget_update(budget: BudgetState, labelled: bool) -> BudgetState:
    """Fade the spending counter and add this step's label cost."""
    budget.u_hat = budget.decay * budget.u_hat + (1.0 if labelled else 0.0)
    return budget
