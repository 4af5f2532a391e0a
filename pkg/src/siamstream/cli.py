"""Experiment command line.

Subcommands:
    run              execute a grid from a key=value config file or a manifest
    recipe           run a named preset experiment
    list-recipes     print the preset names
    validate-config  parse and echo a config without running anything

Configs are flat text files, one `key = value` per line, `#` comments
allowed. Any key can be overridden on the command line as `--key value`
(for example `--seeds 5 --al.budget 0.05`). Outputs are one CSV per
(method, seed) pair plus a manifest.json that records the resolved
configuration and output checksums; running `run` on a manifest reproduces
the CSVs bit for bit. The default output directory comes from the
SIAMSTREAM_OUTPUT environment variable when set.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

from . import __version__
from .errors import ConfigurationError
from .runner import METHODS, MethodConfig, run_grid
from .streams import DriftSchedule, ImbalanceSpec, StreamSpec

OUTPUT_ENV = "SIAMSTREAM_OUTPUT"

CSV_COLUMNS = ("t", "method", "seed", "gmean", "accuracy", "labels_spent", "b_hat", "theta")

# (classes, features) of the synthetic generators
DATASET_SHAPES = {"sea": (10, 2), "circles": (10, 2), "blobs": (12, 3)}

# Every known key with its default, kept as strings so config files,
# overrides, and manifests all round-trip through one parser.
DEFAULTS = {
    "dataset": "sea",
    "T": "20000",
    "seeds": "20",
    "base_seed": "0",
    "methods": "all",
    "drift.kind": "none",
    "drift.step": "5000",
    "drift.period": "5000",
    "imbalance.minority_prob": "none",
    "imbalance.majority_class": "1",
    "memory.capacity": "10",
    "memory.seed_data": "true",
    "al.budget": "0.01",
    "al.mode": "randomised",
    "al.theta0": "1.0",
    "al.step_size": "0.01",
    "al.spread": "1.0",
    "al.window": "300",
    "nn.hidden": "32,32",
    "nn.learning_rate": "0.01",
    "nn.batch_size": "64",
    "nn.slope": "0.01",
    "ensemble.size": "10",
    "ensemble.beta": "0.5",
    "ensemble.update": "queried",
    "eval.fading": "0.99",
    "csv.path": "none",
    "csv.header": "false",
    "csv.normalize": "none",
    "output_dir": "none",
    "thin": "1",
    "jobs": "1",
}


def _recipe(dataset: str, variant: str) -> dict[str, str]:
    settings = {"dataset": dataset, "thin": "10"}
    if variant == "imbalance-extreme":
        settings["imbalance.minority_prob"] = "0.001"
    elif variant == "abrupt":
        settings["drift.kind"] = "abrupt"
    elif variant == "imbalance-abrupt":
        settings["drift.kind"] = "abrupt"
        settings["imbalance.minority_prob"] = "0.01"
    elif variant == "recurrent":
        settings["drift.kind"] = "recurrent"
        settings["al.budget"] = "0.05"
    return settings


RECIPES = {f"{d}-{v}": _recipe(d, v)
           for d in ("sea", "circles", "blobs")
           for v in ("stationary", "imbalance-extreme", "abrupt", "imbalance-abrupt",
                     "recurrent")}


def parse_config_file(path: str) -> dict[str, str]:
    """Read `key = value` lines; `#` starts a comment."""
    raw = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value, got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if not key or not value:
                raise ConfigurationError(f"{path}:{lineno}: empty key or value")
            raw[key] = value
    return raw


def parse_overrides(tokens: list[str]) -> dict[str, str]:
    """`--key value` and `--key=value` pairs from the unparsed argv tail."""
    raw = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--"):
            raise ConfigurationError(f"unexpected argument {token!r}; overrides look like --key value")
        body = token[2:]
        if "=" in body:
            key, value = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(tokens):
                raise ConfigurationError(f"override --{key} is missing a value")
            value = tokens[i + 1]
            i += 2
        raw[key] = value
    return raw


def _parse_bool(key: str, value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")


def _parse_int(key: str, value: str, minimum: int | None = None) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise ConfigurationError(f"{key}: expected an integer, got {value!r}") from None
    if minimum is not None and parsed < minimum:
        raise ConfigurationError(f"{key}: must be >= {minimum}, got {parsed}")
    return parsed


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigurationError(f"{key}: expected a number, got {value!r}") from None


def _parse_choice(key: str, value: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise ConfigurationError(f"{key}: expected one of {', '.join(choices)}, got {value!r}")
    return value


def resolve_settings(raw: dict[str, str]) -> dict:
    """Merge raw strings over the defaults and parse every key."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigurationError(
            f"unknown config keys: {', '.join(unknown)} (known: {', '.join(sorted(DEFAULTS))})")
    merged = {**DEFAULTS, **raw}
    s: dict = {}
    s["dataset"] = _parse_choice("dataset", merged["dataset"], ("sea", "circles", "blobs", "csv"))
    s["T"] = _parse_int("T", merged["T"], minimum=1)
    s["seeds"] = _parse_int("seeds", merged["seeds"], minimum=1)
    s["base_seed"] = _parse_int("base_seed", merged["base_seed"], minimum=0)
    if merged["methods"] == "all":
        s["methods"] = list(METHODS)
    else:
        names = [m.strip() for m in merged["methods"].split(",") if m.strip()]
        bad = [m for m in names if m not in METHODS]
        if bad or not names:
            raise ConfigurationError(
                f"methods: unknown {', '.join(bad) or '(empty)'}; choose from {', '.join(METHODS)}")
        s["methods"] = names
    s["drift.kind"] = _parse_choice("drift.kind", merged["drift.kind"],
                                    ("none", "abrupt", "recurrent", "prior"))
    s["drift.step"] = _parse_int("drift.step", merged["drift.step"], minimum=1)
    s["drift.period"] = _parse_int("drift.period", merged["drift.period"], minimum=1)
    if merged["imbalance.minority_prob"] == "none":
        s["imbalance.minority_prob"] = None
    else:
        s["imbalance.minority_prob"] = _parse_float("imbalance.minority_prob",
                                                    merged["imbalance.minority_prob"])
    s["imbalance.majority_class"] = _parse_int("imbalance.majority_class",
                                               merged["imbalance.majority_class"], minimum=1)
    s["memory.capacity"] = _parse_int("memory.capacity", merged["memory.capacity"], minimum=1)
    s["memory.seed_data"] = _parse_bool("memory.seed_data", merged["memory.seed_data"])
    s["al.budget"] = _parse_float("al.budget", merged["al.budget"])
    s["al.mode"] = _parse_choice("al.mode", merged["al.mode"], ("randomised", "fixed"))
    s["al.theta0"] = _parse_float("al.theta0", merged["al.theta0"])
    s["al.step_size"] = _parse_float("al.step_size", merged["al.step_size"])
    s["al.spread"] = _parse_float("al.spread", merged["al.spread"])
    s["al.window"] = _parse_int("al.window", merged["al.window"], minimum=1)
    try:
        s["nn.hidden"] = tuple(int(h) for h in merged["nn.hidden"].split(",") if h.strip())
    except ValueError:
        raise ConfigurationError(f"nn.hidden: expected comma-separated integers, "
                                 f"got {merged['nn.hidden']!r}") from None
    if not s["nn.hidden"] or any(h < 1 for h in s["nn.hidden"]):
        raise ConfigurationError(f"nn.hidden: layer sizes must be positive, got {merged['nn.hidden']!r}")
    s["nn.learning_rate"] = _parse_float("nn.learning_rate", merged["nn.learning_rate"])
    s["nn.batch_size"] = _parse_int("nn.batch_size", merged["nn.batch_size"], minimum=1)
    s["nn.slope"] = _parse_float("nn.slope", merged["nn.slope"])
    s["ensemble.size"] = _parse_int("ensemble.size", merged["ensemble.size"], minimum=1)
    s["ensemble.beta"] = _parse_float("ensemble.beta", merged["ensemble.beta"])
    s["ensemble.update"] = _parse_choice("ensemble.update", merged["ensemble.update"],
                                         ("queried", "always"))
    s["eval.fading"] = _parse_float("eval.fading", merged["eval.fading"])
    s["csv.path"] = None if merged["csv.path"] == "none" else merged["csv.path"]
    s["csv.header"] = _parse_bool("csv.header", merged["csv.header"])
    s["csv.normalize"] = _parse_choice("csv.normalize", merged["csv.normalize"],
                                       ("none", "minmax", "zscore"))
    s["output_dir"] = None if merged["output_dir"] == "none" else merged["output_dir"]
    s["thin"] = _parse_int("thin", merged["thin"], minimum=1)
    s["jobs"] = _parse_int("jobs", merged["jobs"], minimum=1)
    s["_raw"] = merged
    return s


def settings_to_tasks(settings: dict) -> list[tuple[MethodConfig, StreamSpec]]:
    """Expand resolved settings into the (config, stream spec) grid."""
    drift = DriftSchedule(settings["drift.kind"], settings["drift.step"],
                          settings["drift.period"])
    imbalance = None
    if settings["imbalance.minority_prob"] is not None:
        imbalance = ImbalanceSpec(settings["imbalance.minority_prob"],
                                  settings["imbalance.majority_class"])
    spec = StreamSpec(settings["dataset"], length=settings["T"],
                      capacity=settings["memory.capacity"], drift=drift,
                      imbalance=imbalance, csv_path=settings["csv.path"],
                      csv_header=settings["csv.header"],
                      csv_normalize=settings["csv.normalize"])
    if settings["dataset"] == "csv":
        probe = spec.build(0)  # discover the file's class count and width
        shape = (probe.num_classes, probe.dim)
    else:
        shape = DATASET_SHAPES[settings["dataset"]]
    seeds = [settings["base_seed"] + i for i in range(settings["seeds"])]
    tasks = []
    for method in settings["methods"]:
        for seed in seeds:
            config = MethodConfig(
                method, num_classes=shape[0], dim=shape[1],
                budget=settings["al.budget"], capacity=settings["memory.capacity"],
                hidden=settings["nn.hidden"], learning_rate=settings["nn.learning_rate"],
                batch_size=settings["nn.batch_size"], slope=settings["nn.slope"],
                strategy_mode=settings["al.mode"], theta0=settings["al.theta0"],
                step_size=settings["al.step_size"], spread=settings["al.spread"],
                window=settings["al.window"], ensemble_size=settings["ensemble.size"],
                ensemble_beta=settings["ensemble.beta"], wm_update=settings["ensemble.update"],
                fading=settings["eval.fading"], use_seed_data=settings["memory.seed_data"],
                seed=seed)
            config.validate()
            tasks.append((config, spec))
    return tasks


def _format(value) -> str:
    if isinstance(value, (int,)):
        return str(value)
    return format(value, ".10g")


def write_result_csv(path: str, result, thin: int) -> str:
    """One CSV per run; returns the file's sha256 hex digest."""
    length = len(result)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for t in range(1, length + 1):
            if t % thin != 0 and t != length:
                continue
            row = result.row(t)
            writer.writerow([row.t, result.method, result.seed, _format(row.gmean),
                             _format(row.accuracy), row.labels_spent,
                             _format(row.b_hat), _format(row.theta)])
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        digest.update(f.read())
    return digest.hexdigest()


def execute(settings: dict, out) -> int:
    """Run the grid described by `settings` and write CSVs plus a manifest."""
    tasks = settings_to_tasks(settings)
    out_dir = settings["output_dir"] or os.environ.get(OUTPUT_ENV) or "results"
    os.makedirs(out_dir, exist_ok=True)
    started = time.monotonic()
    grid = run_grid(tasks, jobs=settings["jobs"])
    elapsed = time.monotonic() - started

    runs = []
    for result in grid.results:
        name = f"{result.method}_seed{result.seed}.csv"
        sha = write_result_csv(os.path.join(out_dir, name), result, settings["thin"])
        runs.append({"method": result.method, "seed": result.seed,
                     "path": name, "sha256": sha})
    manifest = {
        "format_version": 1,
        "package_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wallclock_seconds": round(elapsed, 3),
        "config": settings["_raw"],
        "seeds": [settings["base_seed"] + i for i in range(settings["seeds"])],
        "runs": runs,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    for method, results in grid.by_method().items():
        finals = [r.final_gmean for r in results]
        n = len(finals)
        mean = sum(finals) / n
        if n > 1:
            var = sum((v - mean) ** 2 for v in finals) / (n - 1)
            stderr = (var ** 0.5) / (n ** 0.5)
        else:
            stderr = 0.0
        print(f"{method}: final G-mean {mean:.4f} +/- {stderr:.4f} over {n} seed(s)", file=out)
    print(f"wrote {len(runs)} runs and manifest.json to {out_dir}", file=out)

    if grid.failures:
        for index, message in grid.failures:
            config, _ = tasks[index]
            print(f"FAILED {config.method} seed {config.seed}: {message}", file=sys.stderr)
        return 1
    return 0


def load_run_input(path: str) -> dict[str, str]:
    """A config file, or a manifest.json whose config is replayed verbatim."""
    try:
        with open(path) as f:
            head = f.read(1)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    if head == "{":
        with open(path) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: not valid JSON: {exc}") from None
        config = data.get("config")
        if not isinstance(config, dict):
            raise ConfigurationError(f"{path}: manifest has no config block")
        return {str(k): str(v) for k, v in config.items()}
    return parse_config_file(path)


def cmd_run(path: str, overrides: dict[str, str], out) -> int:
    raw = load_run_input(path)
    raw.update(overrides)
    return execute(resolve_settings(raw), out)


def cmd_recipe(name: str, overrides: dict[str, str], out) -> int:
    if name not in RECIPES:
        print(f"unknown recipe {name!r}; available:", file=sys.stderr)
        for known in sorted(RECIPES):
            print(f"  {known}", file=sys.stderr)
        return 2
    raw = dict(RECIPES[name])
    raw.update(overrides)
    return execute(resolve_settings(raw), out)


def cmd_list_recipes(out) -> int:
    for name in sorted(RECIPES):
        print(name, file=out)
    return 0


def cmd_validate(path: str, overrides: dict[str, str], out) -> int:
    raw = load_run_input(path)
    raw.update(overrides)
    settings = resolve_settings(raw)
    tasks = settings_to_tasks(settings)
    for key in sorted(settings["_raw"]):
        print(f"{key} = {settings['_raw'][key]}", file=out)
    print(f"ok: {len(tasks)} runs "
          f"({len(settings['methods'])} methods x {settings['seeds']} seeds)", file=out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="siamstream",
        description="Online active learning experiments on data streams.",
        epilog="Any config key can be overridden as --key value, "
               f"e.g. --seeds 5 --al.budget 0.05. Default output directory: "
               f"$ {OUTPUT_ENV} or ./results.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a config file or replay a manifest")
    p_run.add_argument("config", help="key=value config file or manifest.json")
    p_recipe = sub.add_parser("recipe", help="run a named preset experiment")
    p_recipe.add_argument("name", help="recipe name, see list-recipes")
    sub.add_parser("list-recipes", help="print available recipe names")
    p_val = sub.add_parser("validate-config", help="resolve and echo a config without running")
    p_val.add_argument("config", help="key=value config file or manifest.json")

    args, unknown = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(unknown)
        if args.command == "run":
            return cmd_run(args.config, overrides, sys.stdout)
        if args.command == "recipe":
            return cmd_recipe(args.name, overrides, sys.stdout)
        if args.command == "list-recipes":
            return cmd_list_recipes(sys.stdout)
        if args.command == "validate-config":
            return cmd_validate(args.config, overrides, sys.stdout)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
