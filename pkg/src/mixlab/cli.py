"""``mixlab <bound|simulate|lower|verify> --config PATH --seed U64 --out DIR [--workers N]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .experiments import KINDS, ConfigError, ExperimentConfig, run_experiment, write_outputs

EXIT_OK, EXIT_FAILED, EXIT_BAD_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixlab", description=__doc__)
    p.add_argument("command", choices=KINDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=_u64, required=True, help="master seed (overrides the config)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _reject(out_dir: str, error: ConfigError) -> int:
    report = json.dumps(error.report(), indent=2, sort_keys=True)
    print(report, file=sys.stderr)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config_errors.json"), "w") as fh:
        fh.write(report + "\n")
    return EXIT_BAD_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("--workers must be >= 1", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _reject(args.out, ConfigError([{"field": "<root>", "message": str(exc)}]))
    if isinstance(data, dict):
        data.setdefault("kind", args.command)
        if data["kind"] != args.command:
            return _reject(args.out, ConfigError([{
                "field": "kind",
                "message": f"config is for {data['kind']!r}, command is {args.command!r}"}]))
        data["master_seed"] = args.seed
        data["out"] = args.out
    try:
        cfg = ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        return _reject(args.out, exc)
    result = run_experiment(cfg, workers=args.workers)
    write_outputs(args.out, cfg, result)
    for line in result.lines:
        print(line)
    print("all asserted tolerances pass" if result.all_passed else "some asserted tolerances FAIL")
    return EXIT_OK if result.all_passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
