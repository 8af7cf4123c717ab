"""Command-line entry point: one subcommand per experiment, CSV output.

Exit status is 0 when every check passes, 1 when an invariant fails and 2 for
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .experiments import CONFIG_KEYS, EXPERIMENTS, ExperimentConfig, run_experiment

# flag name -> config field
FLAG_FIELDS = {
    "dim": "dimension", "depth": "depth", "alpha": "alpha", "p": "p", "q": "q", "trials": "trials",
    "seed": "seed", "out": "output_path", "mu": "mu", "lam": "lam", "symbol": "symbol",
    "samples": "samples", "modes": "modes", "workers": "workers",
}
FIELD_TYPES = {
    "dimension": int, "depth": int, "alpha": float, "p": float, "q": float, "trials": int, "seed": int,
    "output_path": str, "mu": str, "lam": str, "symbol": str, "samples": int, "modes": int, "workers": int,
}


def read_config_file(path: str) -> dict:
    """``key=value`` lines; ``#`` starts a comment. Keys are flag or field names."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        key = FLAG_FIELDS.get(key, key)
        if not sep or key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{number}: cannot parse {line!r}")
        try:
            out[key] = FIELD_TYPES[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{number}: bad value for {key}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyadfrac", description="Dyadic fractional-integral experiments.")
    sub = parser.add_subparsers(dest="experiment", metavar="experiment")
    sub.required = True
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--dim", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="CSV path (default: stdout)")
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--mu", help="weight spec: one | power:<beta>")
        p.add_argument("--lam", help="weight spec: one | power:<beta>")
        p.add_argument("--symbol", help="symbol generator: haar | constant:<c> | gaussian")
        p.add_argument("--samples", type=int, help="Monte Carlo samples (kernel-avg)")
        p.add_argument("--modes", type=int, help="Fourier modes K (lower-bound)")
        p.add_argument("--workers", type=int, help="worker threads; results do not depend on it")
        p.add_argument("--record-runtime", action="store_true", help="fill the runtime_ms column")
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            values[name] = value
    assert set(values) <= CONFIG_KEYS
    return ExperimentConfig(experiment=args.experiment, **values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = config_from_args(args)
        report = run_experiment(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    text = report.to_csv(record_runtime=args.record_runtime)
    if config.output_path:
        with open(config.output_path, "w", newline="") as fh:
            fh.write(text)
        print(report.summary())
    else:
        sys.stdout.write(text)
        print(report.summary(), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
