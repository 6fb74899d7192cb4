"""Command-line interface: generate, train, eval, ablate, verify, report.

Exit codes are a stable contract: 0 on success, 1 for runtime or numeric
errors (corrupt files, divergence, failed verification), 2 for configuration
or usage errors (argparse also exits 2 on bad flags).

Heavy imports happen after argument parsing so --threads can pin the BLAS
thread pools through environment variables before numpy first loads.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import ConfigError, GclError

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

COMMANDS = ("generate", "train", "eval", "ablate", "verify", "report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config JSON (defaults apply if omitted)")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument("--out", metavar="DIR", help="override the config output_dir")
    common.add_argument(
        "--threads", type=int, default=1, metavar="N",
        help="BLAS/OpenMP thread cap, applied before numpy loads (default 1)",
    )
    parser = argparse.ArgumentParser(
        prog="gcl-lab",
        description="Generate synthetic multimodal data, train contrastive encoders, "
        "and evaluate retrieval with machine-readable reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write the train/eval datasets for a config",
        "train": "train encoders on the generated data",
        "eval": "evaluate a checkpoint and write report.json + CSV tables",
        "ablate": "train and compare all six loss variants side by side",
        "verify": "recompute every report metric from artifacts and compare",
        "report": "print a human-readable summary of an existing report",
    }
    parsers = {}
    for name in COMMANDS:
        parsers[name] = sub.add_parser(name, parents=[common], help=helps[name])
    parsers["train"].add_argument(
        "--resume", action="store_true", help="continue from the run's existing checkpoint"
    )
    parsers["train"].add_argument(
        "--stop-after-epochs", type=int, metavar="N",
        help="interrupt the run after N epochs (checkpoint records progress)",
    )
    return parser


def _apply_thread_cap(n: int) -> None:
    if n < 1:
        raise ConfigError(f"--threads must be >= 1, got {n}")
    if "numpy" in sys.modules:
        logging.debug("numpy already imported; thread cap applies to new pools only")
    for var in _THREAD_ENV_VARS:
        os.environ[var] = str(n)


def _configure_logging() -> None:
    name = os.environ.get("GCL_LOG_LEVEL", "warn")
    if name not in _LOG_LEVELS:
        raise ConfigError(
            f"GCL_LOG_LEVEL must be one of {sorted(_LOG_LEVELS)}, got {name!r}"
        )
    logging.basicConfig(level=_LOG_LEVELS[name], format="%(levelname)s %(name)s: %(message)s")


def _load_config(args):
    from .experiment import ExperimentConfig

    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig.from_dict({})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    return cfg.with_overrides(**overrides) if overrides else cfg


def _run(args) -> int:
    from . import experiment as exp

    cfg = _load_config(args)
    log = logging.getLogger("gcl_lab.cli")
    log.info("command=%s output_dir=%s run=%s", args.command, cfg.output_dir, cfg.run_hash()[:12])

    if args.command == "generate":
        summary = exp.cmd_generate(cfg)
        for split, info in summary.items():
            print(f"{split}: {info['n_pairs']} pairs -> {info['path']}")
    elif args.command == "train":
        result = exp.cmd_train(
            cfg, resume=args.resume, stop_after_epochs=args.stop_after_epochs
        )
        print(
            f"trained {result['epochs_completed']} epochs ({result['steps']} steps), "
            f"final loss {result['final_loss']:.6f} -> {result['checkpoint']}"
        )
    elif args.command == "eval":
        payload = exp.cmd_eval(cfg)
        paths = exp.ExperimentPaths.for_run(cfg.output_dir)
        print(f"evaluated {len(payload['tasks'])} tasks -> {paths.report}")
    elif args.command == "ablate":
        table = exp.cmd_ablate(cfg)
        paths = exp.ExperimentPaths.for_run(cfg.output_dir)
        print(f"ablated {len(table['rows'])} variants (Recall@{table['k']}, global pool):")
        widths = [max(len(t), 5) for t in table["tasks"]]
        header = "  ".join(f"{t:>{w}s}" for t, w in zip(table["tasks"], widths))
        print(f"  {'':28s} {header}")
        for row in table["rows"]:
            cells = "  ".join(f"{row[t]:>{w}.3f}" for t, w in zip(table["tasks"], widths))
            print(f"  {row['variant']:28s} {cells}")
        print(f"table -> {paths.ablation_json}")
    elif args.command == "verify":
        result = exp.cmd_verify(cfg)
        print(f"report verified: every metric recomputed identically (config {result['config_hash'][:12]})")
    elif args.command == "report":
        print(exp.cmd_report(cfg))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging()
        _apply_thread_cap(args.threads)
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GclError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
