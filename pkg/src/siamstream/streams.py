"""Synthetic stream generators and CSV ingestion.

Three synthetic concepts over a [0, 15]^d feature box:

* sea: two uniform features classified by which band the sum x1 + x2
  falls into, with band boundaries given by a strictly increasing vector.
  The drifted variant redraws the boundaries so most sums change class.
* circles: ten non-overlapping circles of radius 1.5 on a regular grid;
  points are uniform inside their class's circle. The drifted variant
  shifts every centre diagonally (wrapping inside the box), a mild drift.
* blobs: twelve isotropic Gaussians (std 1.0) on a 3 x 2 x 2 lattice of
  centres. The drifted variant permutes the centres cyclically, so every
  class moves somewhere another class used to be, a severe drift.

A stream is a seeded, reproducible sequence of labelled instances plus an
initial seed set D holding `capacity` examples per class, drawn from the
initial concept before the stream starts. Class priors are balanced unless
an imbalance is requested, in which case one majority class absorbs all
remaining probability mass. Drift schedules switch the concept (abrupt,
recurrent) or the prior (prior) at a change step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, GenerationError, StreamFormatError

BOX = 15.0
REJECTION_LIMIT = 10_000

SEA_RHO = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 30.0)
SEA_RHO_DRIFTED = (0.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0)

NONE = "none"
ABRUPT = "abrupt"
RECURRENT = "recurrent"
PRIOR = "prior"


class LabeledInstance(NamedTuple):
    x: np.ndarray
    y: int


@dataclass
class SeaConcept:
    """Classes are bands of the feature sum: class c covers [rho_{c-1}, rho_c)."""

    rho: tuple[float, ...] = SEA_RHO

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=float)
        if r.size < 3 or np.any(np.diff(r) <= 0):
            raise ConfigurationError("rho must be strictly increasing with at least 3 entries")

    @property
    def num_classes(self) -> int:
        return len(self.rho) - 1

    dim = 2

    def sample(self, y: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.rho[y - 1], self.rho[y]
        drawn = 0
        while drawn < REJECTION_LIMIT:
            pts = rng.uniform(0.0, BOX, size=(64, 2))
            drawn += 64
            hits = np.flatnonzero((pts.sum(axis=1) >= lo) & (pts.sum(axis=1) < hi))
            if hits.size:
                return pts[hits[0]]
        raise GenerationError(f"no sample with sum in [{lo}, {hi}) after {drawn} draws")


def class_of_sea(rho, x) -> int:
    """Band lookup for a feature pair under boundaries `rho`."""
    r = np.asarray(rho, dtype=float)
    s = float(x[0]) + float(x[1])
    if not r[0] <= s < r[-1]:
        raise ValueError(f"feature sum {s} outside [{r[0]}, {r[-1]})")
    return int(np.searchsorted(r, s, side="right"))


def _circle_grid(shift: float = 0.0) -> tuple[tuple[float, float], ...]:
    xs = [1.5 + 3.0 * i for i in range(5)]
    ys = [4.5, 10.5]
    centers = [((x + shift) % BOX, (y + shift) % BOX) for y in ys for x in xs]
    return tuple(centers)


@dataclass
class CirclesConcept:
    """One circle per class; points are uniform inside their circle."""

    centers: tuple[tuple[float, float], ...] = _circle_grid()
    radius: float = 1.5

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if np.any(c - self.radius < 0.0) or np.any(c + self.radius > BOX):
            raise ConfigurationError("circles must lie fully inside the feature box")
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                if np.linalg.norm(c[i] - c[j]) < 2.0 * self.radius - 1e-9:
                    raise ConfigurationError(f"circles {i} and {j} overlap")

    @property
    def num_classes(self) -> int:
        return len(self.centers)

    dim = 2

    def sample(self, y: int, rng: np.random.Generator) -> np.ndarray:
        cx, cy = self.centers[y - 1]
        r = self.radius * np.sqrt(rng.random())
        ang = rng.random() * 2.0 * np.pi
        return np.array([cx + r * np.cos(ang), cy + r * np.sin(ang)])


def class_of_circles(concept: CirclesConcept, x) -> int:
    """Index of the circle containing the point."""
    p = np.asarray(x, dtype=float)
    for c, center in enumerate(concept.centers):
        if np.linalg.norm(p - np.asarray(center)) < concept.radius:
            return c + 1
    raise ValueError(f"point {p} lies in no circle")


def _blob_lattice() -> tuple[tuple[float, float, float], ...]:
    xs = [3.75, 7.5, 11.25]
    ys = [5.0, 10.0]
    zs = [5.0, 10.0]
    return tuple((x, y, z) for x in xs for y in ys for z in zs)


@dataclass
class BlobsConcept:
    """Isotropic Gaussian per class; the label is the generating blob."""

    centers: tuple[tuple[float, float, float], ...] = _blob_lattice()
    std: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if np.any(c < 0.0) or np.any(c > BOX):
            raise ConfigurationError("blob centres must lie inside the feature box")
        if self.std <= 0.0:
            raise ConfigurationError(f"std must be positive, got {self.std}")

    @property
    def num_classes(self) -> int:
        return len(self.centers)

    dim = 3

    def sample(self, y: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.centers[y - 1]) + rng.normal(0.0, self.std, size=3)


def sample_from_class(concept, y: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one feature vector of class `y` from a concept."""
    if not 1 <= y <= concept.num_classes:
        raise ValueError(f"class {y} out of range 1..{concept.num_classes}")
    return concept.sample(y, rng)


def make_concept(dataset: str, drifted: bool = False):
    """The initial or drifted concept of a named synthetic dataset."""
    if dataset == "sea":
        return SeaConcept(SEA_RHO_DRIFTED if drifted else SEA_RHO)
    if dataset == "circles":
        # Shift by a lattice step so wrapped circles stay inside the box.
        return CirclesConcept(_circle_grid(3.0) if drifted else _circle_grid())
    if dataset == "blobs":
        centers = _blob_lattice()
        if drifted:
            centers = centers[-1:] + centers[:-1]
        return BlobsConcept(centers)
    raise ConfigurationError(f"unknown dataset {dataset!r}")


@dataclass
class ImbalanceSpec:
    """Multi-minority prior: every class gets `minority_prob` except one majority."""

    minority_prob: float
    majority_class: int = 1

    def __post_init__(self):
        if self.minority_prob <= 0.0:
            raise ConfigurationError(f"minority_prob must be positive, got {self.minority_prob}")

    def prior(self, num_classes: int) -> np.ndarray:
        if not 1 <= self.majority_class <= num_classes:
            raise ConfigurationError(f"majority class {self.majority_class} out of range")
        p = np.full(num_classes, self.minority_prob)
        majority = 1.0 - (num_classes - 1) * self.minority_prob
        if majority <= self.minority_prob:
            raise ConfigurationError(
                f"minority_prob {self.minority_prob} leaves no majority mass for K={num_classes}")
        p[self.majority_class - 1] = majority
        return p


@dataclass
class DriftSchedule:
    """When and how the stream changes: concept drift or a prior switch."""

    kind: str = NONE
    change_step: int = 5000
    period: int = 5000

    def __post_init__(self):
        if self.kind not in (NONE, ABRUPT, RECURRENT, PRIOR):
            raise ConfigurationError(f"unknown drift kind {self.kind!r}")
        if self.change_step < 1 or self.period < 1:
            raise ConfigurationError("change_step and period must be positive")

    def concept_index(self, t: int) -> int:
        """0 for the initial concept, 1 for the drifted one, at step t (1-based)."""
        if self.kind == ABRUPT:
            return 1 if t >= self.change_step else 0
        if self.kind == RECURRENT:
            if t < self.change_step:
                return 0
            return (1 + (t - self.change_step) // self.period) % 2
        return 0


@dataclass
class StreamData:
    """A materialised stream: initial per-class seed set plus the sequence."""

    seed_data: list[LabeledInstance]
    instances: list[LabeledInstance]
    num_classes: int
    dim: int


def make_stream(dataset: str, length: int, seed, capacity: int = 10,
                drift: DriftSchedule | None = None,
                imbalance: ImbalanceSpec | None = None) -> StreamData:
    """Generate a synthetic stream of `length` steps.

    The seed set D holds `capacity` examples per class drawn from the
    initial concept before the stream starts; it is a free startup gift and
    never counts as label spending. Under a prior drift schedule the stream
    starts balanced and switches to the imbalanced prior at the change
    step; all other schedules apply `imbalance` (if any) from the start.
    """
    if length < 1:
        raise ConfigurationError(f"length must be positive, got {length}")
    if capacity < 1:
        raise ConfigurationError(f"capacity must be positive, got {capacity}")
    drift = drift or DriftSchedule()
    concepts = [make_concept(dataset, False), make_concept(dataset, True)]
    k = concepts[0].num_classes
    balanced = np.full(k, 1.0 / k)
    if drift.kind == PRIOR:
        if imbalance is None:
            raise ConfigurationError("prior drift needs an imbalance to switch to")
        post_prior = imbalance.prior(k)
        prior_of = lambda t: post_prior if t >= drift.change_step else balanced
    else:
        fixed_prior = imbalance.prior(k) if imbalance is not None else balanced
        prior_of = lambda t: fixed_prior

    rng = np.random.default_rng(seed)
    seed_data = [LabeledInstance(sample_from_class(concepts[0], c, rng), c)
                 for c in range(1, k + 1) for _ in range(capacity)]

    instances = []
    t = 1
    while t <= length:
        # One segment at a time: the concept and prior are constant inside it.
        concept = concepts[drift.concept_index(t)]
        prior = prior_of(t)
        end = t
        while end < length and drift.concept_index(end + 1) == drift.concept_index(t) \
                and prior_of(end + 1) is prior:
            end += 1
        ys = rng.choice(k, size=end - t + 1, p=prior) + 1
        instances.extend(LabeledInstance(sample_from_class(concept, int(y), rng), int(y))
                         for y in ys)
        t = end + 1
    return StreamData(seed_data, instances, k, concepts[0].dim)


def derive_seeds(seed) -> list[np.random.SeedSequence]:
    """Independent child seeds for the (stream, learner, strategy) of one run.

    The stream child depends only on the run seed, so different methods at
    the same seed see the same stream and can be compared pairwise.
    """
    return np.random.SeedSequence(seed).spawn(3)


@dataclass
class StreamSpec:
    """Recipe for building a stream: a synthetic generator or a CSV file."""

    dataset: str
    length: int = 20000
    capacity: int = 10
    drift: DriftSchedule = field(default_factory=DriftSchedule)
    imbalance: ImbalanceSpec | None = None
    csv_path: str | None = None
    csv_header: bool = False
    csv_normalize: str = "none"

    def build(self, seed) -> StreamData:
        if self.dataset == "csv":
            if not self.csv_path:
                raise ConfigurationError("csv dataset needs csv_path")
            return load_csv_stream(self.csv_path, self.capacity, self.csv_header,
                                   self.csv_normalize)
        return make_stream(self.dataset, self.length, derive_seeds(seed)[0],
                           self.capacity, self.drift, self.imbalance)


def load_csv_stream(path, capacity: int = 10, has_header: bool = False,
                    normalize: str = "none", shuffle_seed=None) -> StreamData:
    """Read a labelled stream from CSV: feature columns then an integer label.

    Rows are kept in file order unless `shuffle_seed` is given. The first
    `capacity` occurrences of each class become the seed set D; the rest
    form the stream. Labels are remapped to 1..K by sorted original value.
    Normalisation ("minmax" or "zscore") is fitted on D only and applied to
    everything; constant features map to 0.
    """
    if normalize not in ("none", "minmax", "zscore"):
        raise ConfigurationError(f"unknown normalisation {normalize!r}")
    rows, labels = [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise StreamFormatError(f"line {lineno}: expected features and a label")
            try:
                rows.append([float(v) for v in row[:-1]])
                label = float(row[-1])
            except ValueError as exc:
                raise StreamFormatError(f"line {lineno}: {exc}") from None
            if label != int(label):
                raise StreamFormatError(f"line {lineno}: label {row[-1]!r} is not an integer")
            labels.append(int(label))
            if len(rows[-1]) != len(rows[0]):
                raise StreamFormatError(f"line {lineno}: inconsistent feature count")
    if not rows:
        raise StreamFormatError(f"{path}: no data rows")
    x = np.asarray(rows, dtype=float)
    raw = np.asarray(labels, dtype=int)
    uniq = np.unique(raw)
    if uniq.size < 2:
        raise ConfigurationError("need at least two classes in the CSV")
    remap = {int(v): i + 1 for i, v in enumerate(uniq)}
    y = np.asarray([remap[int(v)] for v in raw], dtype=int)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(y.size)
        x, y = x[order], y[order]

    k = uniq.size
    taken = {c: 0 for c in range(1, k + 1)}
    seed_idx, stream_idx = [], []
    for i in range(y.size):
        if taken[int(y[i])] < capacity:
            taken[int(y[i])] += 1
            seed_idx.append(i)
        else:
            stream_idx.append(i)
    short = [c for c, n in taken.items() if n < capacity]
    if short:
        raise ConfigurationError(f"classes {short} have fewer than {capacity} examples")

    d = x[seed_idx]
    if normalize == "minmax":
        lo, hi = d.min(axis=0), d.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        transform = lambda a: np.where(hi > lo, (a - lo) / span, 0.0)
    elif normalize == "zscore":
        mu, sd = d.mean(axis=0), d.std(axis=0)
        safe = np.where(sd > 0.0, sd, 1.0)
        transform = lambda a: np.where(sd > 0.0, (a - mu) / safe, 0.0)
    else:
        transform = lambda a: a
    x = transform(x)

    seed_data = [LabeledInstance(x[i], int(y[i])) for i in seed_idx]
    instances = [LabeledInstance(x[i], int(y[i])) for i in stream_idx]
    return StreamData(seed_data, instances, k, x.shape[1])
