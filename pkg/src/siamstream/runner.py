"""Binding of streams, models, querying, and evaluation into runs.

The protocol per step is strict test-then-train: the learner predicts, the
prediction is scored against the true label, and only then may the label be
bought. Querying happens only while the spending estimate is below budget;
a bought label goes into the learner's memory (where it has one) and
triggers one training epoch. The budget estimate decays every step either
way. Seeded examples handed to memory-based methods before the stream are
free: they are startup state, not spending.

Method roster
    rvus          softmax net, uncertainty querying, trains on each bought
                  label alone (no memory)
    actiq         softmax net + per-class memory, uncertainty querying,
                  trains on the whole memory
    rvss          softmax net + memory, querying by cosine similarity of
                  the raw input to the predicted class's queue
    actisiamese   siamese net + memory, querying by the learned similarity
                  to the predicted class's queue
A "-wm" suffix wraps the method in a weighted majority ensemble with one
shared strategy and budget at the ensemble level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import models, nn
from .active import BudgetState, StrategyState, budget_allows, budget_update, decide
from .ensemble import (WeightedMajorityEnsemble, ensemble_criterion, ensemble_predict,
                       ensemble_train, ensemble_weight_update, member_losses)
from .errors import ConfigurationError, InsufficientDataError, NoPredictionError, NumericError
from .evaluation import MetricsRow, PrequentialTracker, aggregate_runs
from .memory import MultiQueue
from .streams import StreamData, derive_seeds

METHODS = ("rvus", "actiq", "rvss", "actisiamese",
           "rvus-wm", "actiq-wm", "rvss-wm", "actisiamese-wm")

WM_QUERIED = "queried"
WM_ALWAYS = "always"


@dataclass
class MethodConfig:
    """Everything that defines one method on one dataset shape."""

    method: str
    num_classes: int
    dim: int
    budget: float = 0.01
    capacity: int = 10
    hidden: tuple[int, ...] = (32, 32)
    learning_rate: float = 0.01
    batch_size: int = 64
    slope: float = 0.01
    strategy_mode: str = "randomised"
    theta0: float = 1.0
    step_size: float = 0.01
    spread: float = 1.0
    window: int = 300
    ensemble_size: int = 10
    ensemble_beta: float = 0.5
    wm_update: str = WM_QUERIED
    fading: float = 0.99
    use_seed_data: bool = True
    seed: int = 0

    @property
    def base_method(self) -> str:
        return self.method.removesuffix("-wm")

    @property
    def is_ensemble(self) -> bool:
        return self.method.endswith("-wm")

    @property
    def uses_memory(self) -> bool:
        return self.base_method != "rvus"

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not 0.0 <= self.budget <= 1.0:
            raise ConfigurationError(f"budget must lie in [0, 1], got {self.budget}")
        if self.capacity < 1:
            raise ConfigurationError(f"capacity must be positive, got {self.capacity}")
        if self.ensemble_size < 1:
            raise ConfigurationError(f"ensemble_size must be positive, got {self.ensemble_size}")
        if self.wm_update not in (WM_QUERIED, WM_ALWAYS):
            raise ConfigurationError(f"wm_update must be 'queried' or 'always', got {self.wm_update!r}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be positive, got {self.batch_size}")


class RvusLearner:
    """One-pass uncertainty learner: no memory, trains on single examples."""

    def __init__(self, config: MethodConfig, seed):
        self.model = models.init_standard(config.dim, config.num_classes, config.hidden,
                                          config.learning_rate, config.slope, seed)

    def predict(self, x) -> int:
        return models.standard_predict(self.model, x)[0]

    def predict_proba(self, x) -> np.ndarray:
        return models.standard_predict(self.model, x)[1]

    def criterion(self, x, predicted: int) -> float:
        return models.standard_predict(self.model, x)[2]

    def learn(self, x, y: int) -> None:
        models.standard_train_one(self.model, x, y)


class ActiqLearner:
    """Uncertainty learner with a per-class memory it retrains on."""

    def __init__(self, config: MethodConfig, seed, seed_data):
        model_seed, train_seed = nn.seed_sequence(seed).spawn(2)
        self.model = models.init_standard(config.dim, config.num_classes, config.hidden,
                                          config.learning_rate, config.slope, model_seed)
        self.memory = MultiQueue(config.num_classes, config.capacity, seed_data)
        self.batch_size = config.batch_size
        self.rng = np.random.default_rng(train_seed)

    def predict(self, x) -> int:
        return models.standard_predict(self.model, x)[0]

    def predict_proba(self, x) -> np.ndarray:
        return models.standard_predict(self.model, x)[1]

    def criterion(self, x, predicted: int) -> float:
        return models.standard_predict(self.model, x)[2]

    def learn(self, x, y: int) -> None:
        self.memory.append(x, y)
        models.standard_train_on_memory(self.model, self.memory, self.batch_size, self.rng)


class RvssLearner(ActiqLearner):
    """Like actiq but queries by raw-input similarity to the predicted class."""

    def criterion(self, x, predicted: int) -> float:
        return models.input_space_criterion(self.memory, x, predicted)


class ActiSiameseLearner:
    """Siamese learner: predicts and queries through learned pair similarity."""

    def __init__(self, config: MethodConfig, seed, seed_data):
        model_seed, train_seed = nn.seed_sequence(seed).spawn(2)
        self.model = models.init_siamese(config.dim, config.hidden, config.learning_rate,
                                         config.slope, model_seed)
        self.memory = MultiQueue(config.num_classes, config.capacity, seed_data)
        self.num_classes = config.num_classes
        self.batch_size = config.batch_size
        self.rng = np.random.default_rng(train_seed)

    def predict(self, x) -> int:
        return models.siamese_predict(self.model, self.memory, x)[0]

    def predict_proba(self, x) -> np.ndarray:
        _, means = models.siamese_predict(self.model, self.memory, x)
        p = np.zeros(self.num_classes)
        for c, m in means.items():
            p[c - 1] = m
        return p / p.sum()

    def criterion(self, x, predicted: int) -> float:
        return models.siamese_criterion(self.model, self.memory, x, predicted)

    def learn(self, x, y: int) -> None:
        self.memory.append(x, y)
        try:
            models.siamese_train(self.model, self.memory, self.batch_size, self.rng)
        except InsufficientDataError:
            pass  # a lone class cannot form pairs yet; keep the label, skip the epoch


def _build_single(config: MethodConfig, seed, seed_data):
    base = config.base_method
    if base == "rvus":
        return RvusLearner(config, seed)
    if base == "actiq":
        return ActiqLearner(config, seed, seed_data)
    if base == "rvss":
        return RvssLearner(config, seed, seed_data)
    if base == "actisiamese":
        return ActiSiameseLearner(config, seed, seed_data)
    raise ConfigurationError(f"unknown method {config.method!r}")


@dataclass
class RunResult:
    """Per-step metrics of one run, column-wise."""

    method: str
    seed: int
    gmean: np.ndarray
    accuracy: np.ndarray
    labels_spent: np.ndarray
    b_hat: np.ndarray
    theta: np.ndarray

    def __len__(self) -> int:
        return self.gmean.size

    def row(self, t: int) -> MetricsRow:
        i = t - 1
        return MetricsRow(t, float(self.gmean[i]), float(self.accuracy[i]),
                          int(self.labels_spent[i]), float(self.b_hat[i]), float(self.theta[i]))

    def __iter__(self):
        return (self.row(t) for t in range(1, len(self) + 1))

    @property
    def final_gmean(self) -> float:
        return float(self.gmean[-1])


def run(config: MethodConfig, stream: StreamData) -> RunResult:
    """Execute one method over one stream under the test-then-train protocol."""
    config.validate()
    if stream.num_classes != config.num_classes or stream.dim != config.dim:
        raise ConfigurationError(
            f"stream is {stream.num_classes} classes x {stream.dim} features, "
            f"config expects {config.num_classes} x {config.dim}")

    _, learner_seed, strategy_seed = derive_seeds(config.seed)
    seed_data = stream.seed_data if (config.uses_memory and config.use_seed_data) else None
    if config.is_ensemble:
        member_seeds = learner_seed.spawn(config.ensemble_size)
        ens = WeightedMajorityEnsemble(
            [_build_single(config, s, seed_data) for s in member_seeds],
            config.ensemble_beta)
        learner = None
    else:
        ens = None
        learner = _build_single(config, learner_seed, seed_data)

    strategy = StrategyState(config.strategy_mode, config.theta0, config.step_size,
                             config.spread, seed=strategy_seed)
    # Warm-start the spending counter at its budget fixed point. From zero,
    # the gate admits a burst of ~B*w early queries on top of the steady
    # rate, pushing the true windowed spending to nearly 2B around step w.
    # Starting one decay below the fixed point caps spending at B from the
    # first step, and for B=1 keeps b_hat strictly below 1 forever, so a
    # full budget still buys every label.
    budget = BudgetState(config.budget, config.window,
                         u_hat=config.budget * (config.window - 1))
    tracker = PrequentialTracker(config.num_classes, config.fading)

    length = len(stream.instances)
    gmean = np.empty(length)
    accuracy = np.empty(length)
    labels_spent = np.empty(length, dtype=np.int64)
    b_hat = np.empty(length)
    theta = np.empty(length)
    spent = 0

    for t, (x, y) in enumerate(stream.instances, start=1):
        try:
            if ens is not None:
                try:
                    y_hat, p_avg = ensemble_predict(ens, x)
                except NoPredictionError:
                    y_hat, p_avg = 1, None
            else:
                p_avg = None
                try:
                    y_hat = learner.predict(x)
                except NoPredictionError:
                    y_hat = 1

            tracker.update(y, y_hat)

            if ens is not None and config.wm_update == WM_ALWAYS:
                losses = member_losses(ens, y)
                if losses is not None:
                    ensemble_weight_update(ens, losses)

            labelled = False
            if budget_allows(budget):
                if ens is not None:
                    v = ensemble_criterion(p_avg) if p_avg is not None else 0.0
                else:
                    try:
                        v = learner.criterion(x, y_hat)
                    except NoPredictionError:
                        v = 0.0
                labelled = decide(strategy, v)
                if labelled:
                    spent += 1
                    if ens is None:
                        learner.learn(x, y)
                    elif config.wm_update == WM_QUERIED:
                        ensemble_train(ens, x, y)
                    else:
                        for member in ens.members:
                            member.learn(x, y)
            budget_update(budget, labelled)
        except NumericError as exc:
            raise NumericError(f"run aborted at step {t}: {exc}") from exc

        gmean[t - 1] = tracker.gmean()
        accuracy[t - 1] = tracker.accuracy()
        labels_spent[t - 1] = spent
        b_hat[t - 1] = budget.b_hat
        theta[t - 1] = strategy.theta

    return RunResult(config.method, config.seed, gmean, accuracy, labels_spent, b_hat, theta)


@dataclass
class GridResult:
    """Outcomes of a batch of runs, failures kept alongside."""

    results: list[RunResult]
    failures: list[tuple[int, str]] = field(default_factory=list)

    def by_method(self) -> dict[str, list[RunResult]]:
        grouped: dict[str, list[RunResult]] = {}
        for r in self.results:
            grouped.setdefault(r.method, []).append(r)
        return grouped

    def aggregate_gmean(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Per-method mean and standard error of the G-mean curve over seeds."""
        return {m: aggregate_runs([r.gmean for r in rs]) for m, rs in self.by_method().items()}


def _execute_task(task) -> RunResult:
    config, spec = task
    return run(config, spec.build(config.seed))


def run_grid(tasks, jobs: int = 1) -> GridResult:
    """Run (config, stream spec) tasks, serially or across processes.

    Results come back in task order either way, so aggregates do not depend
    on scheduling. A failed run is recorded with its task index and the
    grid continues.
    """
    tasks = list(tasks)
    results, failures = [], []
    if jobs <= 1:
        for i, task in enumerate(tasks):
            try:
                results.append(_execute_task(task))
            except Exception as exc:
                failures.append((i, f"{type(exc).__name__}: {exc}"))
        return GridResult(results, failures)
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_execute_task, task) for task in tasks]
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except Exception as exc:
                failures.append((i, f"{type(exc).__name__}: {exc}"))
    return GridResult(results, failures)
