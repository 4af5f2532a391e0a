"""Weighted majority ensembling of online learners.

Members are duck-typed: they expose `predict_proba(x)` returning a
probability vector over all classes (raising NoPredictionError when they
cannot predict yet) and `learn(x, y)` to absorb a labelled example. The
ensemble predicts with the weight-averaged probability vector and punishes
members multiplicatively for zero-one mistakes.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, NoPredictionError


class WeightedMajorityEnsemble:
    """N independently seeded members with multiplicative weights."""

    def __init__(self, members: list, beta: float = 0.5):
        if not members:
            raise ConfigurationError("ensemble needs at least one member")
        if beta < 0.0:
            raise ConfigurationError(f"beta must be non-negative, got {beta}")
        self.members = list(members)
        self.beta = beta
        self.weights = np.full(len(members), 1.0 / len(members))
        self.last_member_predictions: list[int | None] = [None] * len(members)


def ensemble_predict(ens: WeightedMajorityEnsemble, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Weight-averaged probability vector and its argmax class.

    Members that cannot predict are skipped (their weight is left out of
    the average); if none can, the ensemble cannot predict either. Each
    member's own argmax is cached for the next weight update.
    """
    total = None
    used_weight = 0.0
    for i, member in enumerate(ens.members):
        try:
            p = member.predict_proba(x)
        except NoPredictionError:
            ens.last_member_predictions[i] = None
            continue
        ens.last_member_predictions[i] = int(np.argmax(p)) + 1
        contribution = ens.weights[i] * p
        total = contribution if total is None else total + contribution
        used_weight += ens.weights[i]
    if total is None:
        raise NoPredictionError("no ensemble member can predict")
    p_avg = total / used_weight
    return int(np.argmax(p_avg)) + 1, p_avg


def ensemble_criterion(p_avg: np.ndarray) -> float:
    """Confidence of the averaged prediction."""
    return float(np.max(p_avg))


def ensemble_weight_update(ens: WeightedMajorityEnsemble, losses) -> WeightedMajorityEnsemble:
    """Scale each weight by exp(-beta * loss) and renormalise to sum 1."""
    losses = np.asarray(losses, dtype=float)
    if losses.shape != ens.weights.shape:
        raise ConfigurationError(f"expected {ens.weights.size} losses, got {losses.shape}")
    if not np.all((losses == 0.0) | (losses == 1.0)):
        raise ValueError("losses must be zero-one")
    ens.weights = ens.weights * np.exp(-ens.beta * losses)
    ens.weights /= ens.weights.sum()
    return ens


def member_losses(ens: WeightedMajorityEnsemble, y: int) -> np.ndarray | None:
    """Zero-one losses of the members' cached predictions against `y`.

    Members that had no prediction are charged nothing. Returns None when
    no member predicted at all.
    """
    preds = ens.last_member_predictions
    if all(p is None for p in preds):
        return None
    return np.array([0.0 if p is None or p == y else 1.0 for p in preds])


def ensemble_train(ens: WeightedMajorityEnsemble, x: np.ndarray, y: int) -> None:
    """Update weights from the members' pre-training predictions, then train all."""
    losses = member_losses(ens, y)
    if losses is not None:
        ensemble_weight_update(ens, losses)
    for member in ens.members:
        member.learn(x, y)
