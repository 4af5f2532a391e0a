"""End-to-end acceptance checks for the assembled package.

Each test prints one `criterion N: PASS/FAIL` line and asserts it, so a
verbose pytest run reads as a checklist. These checks drive the full stack
at experiment scale (20000-step streams, many seeds), which is why the
module takes roughly twenty minutes on one core. The per-component
unit tests cover the same code piecewise and run in seconds.
"""

import hashlib
import itertools

import numpy as np
import pytest

from siamstream import cli, models, nn
from siamstream.evaluation import PrequentialTracker
from siamstream.memory import MultiQueue
from siamstream.runner import MethodConfig, run
from siamstream.streams import DriftSchedule, ImbalanceSpec, StreamSpec, make_stream

FD_STEP = 1e-5


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def sea_spec():
    return StreamSpec("sea", length=20000, capacity=10)


@pytest.fixture(scope="module")
def stationary_streams(sea_spec):
    return {s: sea_spec.build(s) for s in range(5)}


@pytest.fixture(scope="module")
def siamese_low_budget(stationary_streams):
    """The 1% budget reference arm, shared by several criteria below."""
    out = {}
    for s, stream in stationary_streams.items():
        cfg = MethodConfig("actisiamese", num_classes=10, dim=2, budget=0.01, seed=s)
        out[s] = run(cfg, stream)
    return out


def numeric_gradient(net, x, y, kind, h=FD_STEP):
    """Central finite differences of the mean loss over every parameter."""
    out = []
    for i in range(len(net.weights)):
        pieces = []
        for arr in (net.weights[i], net.biases[i]):
            g = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                arr[idx] += h
                up = nn.loss(kind, nn.forward(net, x).output, y)
                arr[idx] -= 2 * h
                down = nn.loss(kind, nn.forward(net, x).output, y)
                arr[idx] += h
                g[idx] = (up - down) / (2 * h)
            pieces.append(g)
        out.append(tuple(pieces))
    return out


def max_relative_error(analytic, numeric):
    worst = 0.0
    for (adw, adb), (ndw, ndb) in zip(analytic, numeric):
        for a, f in ((adw, ndw), (adb, ndb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-4)
            worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


def test_criterion_01_gradients_match_finite_differences():
    rng = np.random.default_rng(2026)
    worst = 0.0
    for trial in range(20):
        dim = int(rng.integers(2, 6))
        depth = int(rng.integers(1, 3))
        hidden = tuple(int(w) for w in rng.integers(3, 9, size=depth))
        if trial % 2 == 0:
            classes = int(rng.integers(2, 6))
            net = nn.init_network(nn.NetworkSpec(dim, hidden, nn.SOFTMAX,
                                                 classes=classes, seed=trial))
            kind = nn.CATEGORICAL
            y = nn.one_hot(rng.integers(1, classes + 1, size=5), classes)
        else:
            net = nn.init_network(nn.NetworkSpec(dim, hidden, nn.SIGMOID, seed=trial))
            kind = nn.BINARY
            y = rng.integers(0, 2, size=(5, 1)).astype(float)
        x = rng.normal(size=(5, dim))
        analytic = nn.backward(net, nn.forward(net, x), y, kind)
        numeric = numeric_gradient(net, x, y, kind)
        worst = max(worst, max_relative_error(analytic, numeric))
    verdict(1, worst < 1e-4,
            f"worst relative gradient error {worst:.2e} over 20 random networks")


def brute_force_pairs(mq):
    items = [(tuple(map(float, x)), y) for x, y in mq.snapshot()]
    pos, neg = set(), set()
    for (xa, ya), (xb, yb) in itertools.combinations(items, 2):
        pair = frozenset((xa, xb)) if xa != xb else (xa, xb)
        (pos if ya == yb else neg).add(pair)
    return pos, neg


def batch_pair_sets(batch):
    pos, neg = set(), set()
    for l, r, y in zip(batch.left, batch.right, batch.labels):
        tl, tr = tuple(map(float, l)), tuple(map(float, r))
        pair = frozenset((tl, tr)) if tl != tr else (tl, tr)
        (pos if y == 1.0 else neg).add(pair)
    return pos, neg


def test_criterion_02_pair_builder_matches_brute_force():
    rng = np.random.default_rng(7)
    checked = 0
    attempts = 0
    bad = None
    while checked < 200 and attempts < 5000 and bad is None:
        attempts += 1
        k = int(rng.integers(2, 5))
        lengths = rng.integers(0, 6, size=k)
        mq = MultiQueue(k, 5)
        for c, m in enumerate(lengths, start=1):
            for _ in range(int(m)):
                mq.append(rng.normal(size=3), c)
        pos_full, neg_full = brute_force_pairs(mq)
        # the builder balances by shrinking the larger side, so the positive
        # set is only guaranteed intact when cross-class pairs are plentiful
        if not pos_full or len(neg_full) < len(pos_full):
            continue
        checked += 1
        batch = models.build_pairs(mq, seed=int(rng.integers(2 ** 32)))
        pos, neg = batch_pair_sets(batch)
        if pos != pos_full:
            bad = f"memory {list(lengths)}: positives differ from enumeration"
        elif not neg <= neg_full:
            bad = f"memory {list(lengths)}: negatives outside the cross-class set"
        elif len(pos) != len(neg):
            bad = f"memory {list(lengths)}: {len(pos)} positives vs {len(neg)} negatives"
    verdict(2, bad is None and checked == 200,
            bad or f"{checked} random memories: positives exact, "
                   f"negatives a balanced cross-class subset")


def test_criterion_03_unfaded_gmean_matches_confusion_matrix():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 6))
        length = int(rng.integers(1, 1001))
        tracker = PrequentialTracker(k, fading=1.0)
        n = np.zeros(k)
        tp = np.zeros(k)
        for _ in range(length):
            y = int(rng.integers(1, k + 1))
            roll = rng.random()
            if roll < 0.45:
                y_hat = y
            elif roll < 0.95:
                y_hat = int(rng.integers(1, k + 1))
            else:
                y_hat = k + 3  # junk prediction, must simply count as a miss
            tracker.update(y, y_hat)
            n[y - 1] += 1.0
            if y_hat == y:
                tp[y - 1] += 1.0
            observed = n > 0.0
            r = tp[observed] / n[observed]
            direct = 0.0 if np.any(r == 0.0) else float(np.prod(r) ** (1.0 / r.size))
            worst = max(worst, abs(tracker.gmean() - direct))
    verdict(3, worst <= 1e-12,
            f"max |tracker - confusion matrix| = {worst:.2e} over 100 streams")


def test_criterion_04_spending_stays_within_budget(sea_spec):
    window = 300
    kernel = np.ones(window)
    worst_over = -1.0
    worst_gap = 0.0
    for s in range(20):
        stream = sea_spec.build(s)
        for b in (0.01, 0.05, 0.1):
            cfg = MethodConfig("actisiamese", num_classes=10, dim=2, budget=b, seed=s)
            res = run(cfg, stream)
            per_step = np.diff(res.labels_spent, prepend=0)
            rate = np.convolve(per_step, kernel)[:len(per_step)] / window
            worst_over = max(worst_over, float(np.max(rate - b)))
            gaps = np.abs(res.b_hat[window - 1:] - rate[window - 1:])
            worst_gap = max(worst_gap, float(np.max(gaps)))
    ok = worst_over <= 0.02 and worst_gap <= 0.02
    verdict(4, ok,
            f"60 runs: worst windowed overshoot {worst_over:+.4f} (cap +0.02), "
            f"worst |estimate - actual| {worst_gap:.4f} from step {window} on (cap 0.02)")


def test_criterion_05_low_budget_cost(stationary_streams, siamese_low_budget):
    def arm(method, budget):
        finals = []
        for s in range(5):
            if method == "actisiamese" and budget == 0.01:
                finals.append(siamese_low_budget[s].final_gmean)
                continue
            cfg = MethodConfig(method, num_classes=10, dim=2, budget=budget, seed=s)
            finals.append(run(cfg, stationary_streams[s]).final_gmean)
        return float(np.mean(finals))

    asi_low, asi_full = arm("actisiamese", 0.01), arm("actisiamese", 1.0)
    rvus_low, rvus_full = arm("rvus", 0.01), arm("rvus", 1.0)
    siamese_holds = asi_low >= asi_full - 0.05
    softmax_degrades = rvus_low <= rvus_full - 0.05
    verdict(5, siamese_holds and softmax_degrades,
            f"final gmean, 1% vs 100% budget: actisiamese {asi_low:.4f} vs "
            f"{asi_full:.4f} (gap must be <= 0.05); rvus {rvus_low:.4f} vs "
            f"{rvus_full:.4f} (drop must be >= 0.05)")


def test_criterion_06_fast_early_learning(stationary_streams, siamese_low_budget):
    checkpoint = 2000
    asi = float(np.mean([siamese_low_budget[s].gmean[checkpoint - 1] for s in range(5)]))
    actiq = []
    for s in range(5):
        cfg = MethodConfig("actiq", num_classes=10, dim=2, budget=0.01, seed=s)
        actiq.append(run(cfg, stationary_streams[s]).gmean[checkpoint - 1])
    actiq = float(np.mean(actiq))
    verdict(6, asi >= actiq + 0.10,
            f"gmean at step {checkpoint}: actisiamese {asi:.4f}, "
            f"actiq {actiq:.4f} (margin must be >= 0.10)")


def test_criterion_07_extreme_imbalance_wins():
    spec = StreamSpec("sea", length=20000, capacity=10,
                      imbalance=ImbalanceSpec(0.001, 1))
    finals = {m: [] for m in ("actisiamese", "actiq", "rvus")}
    for s in range(5):
        stream = spec.build(s)
        for method in finals:
            cfg = MethodConfig(method, num_classes=10, dim=2, budget=0.01, seed=s)
            finals[method].append(run(cfg, stream).final_gmean)
    vs_actiq = sum(a > b for a, b in zip(finals["actisiamese"], finals["actiq"]))
    vs_rvus = sum(a > b for a, b in zip(finals["actisiamese"], finals["rvus"]))
    verdict(7, vs_actiq >= 4 and vs_rvus >= 4,
            f"0.1% minority rate, paired final gmean wins: vs actiq {vs_actiq}/5, "
            f"vs rvus {vs_rvus}/5 (each needs >= 4)")


def test_criterion_08_abrupt_drift_recovery(siamese_low_budget):
    spec = StreamSpec("sea", length=20000, capacity=10,
                      drift=DriftSchedule("abrupt", 5000))
    drifted = []
    for s in range(5):
        cfg = MethodConfig("actisiamese", num_classes=10, dim=2, budget=0.01, seed=s)
        drifted.append(run(cfg, spec.build(s)).final_gmean)
    stationary = [siamese_low_budget[s].final_gmean for s in range(5)]
    gap = abs(float(np.mean(drifted)) - float(np.mean(stationary)))
    verdict(8, gap <= 0.05,
            f"mean final gmean: drifted {np.mean(drifted):.4f} vs stationary "
            f"{np.mean(stationary):.4f}, |difference| {gap:.4f} (cap 0.05)")


def test_criterion_09_ensemble_not_worse(stationary_streams, siamese_low_budget):
    wm = []
    for s in range(5):
        cfg = MethodConfig("actisiamese-wm", num_classes=10, dim=2, budget=0.01, seed=s)
        wm.append(run(cfg, stationary_streams[s]).final_gmean)
    single = [siamese_low_budget[s].final_gmean for s in range(5)]
    wm_mean, single_mean = float(np.mean(wm)), float(np.mean(single))
    verdict(9, wm_mean >= single_mean - 0.01,
            f"mean final gmean: ensemble {wm_mean:.4f} vs single {single_mean:.4f} "
            f"(ensemble may trail by at most 0.01)")


def test_criterion_10_manifest_replay_is_checksum_identical(tmp_path):
    first = tmp_path / "first"
    again = tmp_path / "again"
    overrides = ["--T", "300", "--seeds", "2", "--methods", "actisiamese,rvus",
                 "--memory.capacity", "5", "--nn.hidden", "8", "--al.budget", "0.2"]
    code_first = cli.main(["recipe", "sea-stationary", *overrides,
                           "--output_dir", str(first)])
    code_again = cli.main(["run", str(first / "manifest.json"),
                           "--output_dir", str(again)])

    def digests(directory):
        return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(directory.glob("*.csv"))}

    a, b = digests(first), digests(again)
    ok = code_first == 0 and code_again == 0 and len(a) == 4 and a == b
    verdict(10, ok,
            f"exit codes {code_first}/{code_again}, {len(a)} csv files, "
            f"checksums {'identical' if a == b else 'differ'} after manifest replay")


def test_criterion_11_imbalanced_prior_frequency():
    stream = make_stream("sea", 100000, 0, capacity=10,
                         imbalance=ImbalanceSpec(0.001, 1))
    labels = np.array([y for _, y in stream.instances])
    majority = float(np.mean(labels == 1))
    verdict(11, abs(majority - 0.991) <= 0.003,
            f"majority class frequency {majority:.5f} over 100000 draws "
            f"(target 0.991 +/- 0.003)")
