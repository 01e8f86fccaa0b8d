#!/usr/bin/env python3
"""
Command line - gen-data, train, eval, verify, bias-study, serve

Exit codes: 0 success, 1 invalid input (arguments, config, files),
2 numeric failure (including identity residuals above tolerance).

Usage:
    python cli.py train --config configs/pinwheel.json --override objective.alpha=8
    python cli.py verify --config configs/theorems.json
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import HOST, LOG_FORMAT, LOG_LEVEL, PORT
from core.errors import DecompError, NumericError
from core.random_streams import DATA, RandomStreams
from models import (
    BiasStudyConfig,
    DatasetConfig,
    ExperimentConfig,
    VerificationConfig,
    apply_overrides,
    validate_config,
)
from repositories.config_repository import ConfigRepository
from repositories.run_repository import RunRepository

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with the validation code"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="dvae", description="Decomposition VAE toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    def common(p: argparse.ArgumentParser, config_required: bool):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dot-path edit of the config, value parsed as JSON when possible (repeatable)")

    p = sub.add_parser("gen-data", help="write a generated dataset as NPY")
    common(p, config_required=False)
    p.add_argument("--generator", choices=["pinwheel", "factor_images"],
                   help="generator to use when no config is given")

    common(sub.add_parser("train", help="train a model and write a run directory"), config_required=True)

    p = sub.add_parser("eval", help="recompute metrics from a run's checkpoint")
    p.add_argument("--run", required=True, help="run directory written by train")
    p.add_argument("--seed", type=int, help="metric stream seed (default: the run's seed)")
    p.add_argument("--metrics", help="comma-separated metric names (default: the run's metric list)")

    common(sub.add_parser("verify", help="run the identity verification sweeps"), config_required=False)
    common(sub.add_parser("bias-study", help="tabulate the minibatch entropy estimator bias"),
           config_required=False)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default=HOST)
    p.add_argument("--port", type=int, default=PORT)
    return parser


def load_tree(args: argparse.Namespace) -> Dict[str, Any]:
    """Config file (or an empty tree) with --override, --seed and --out applied"""
    tree = ConfigRepository().load(args.config) if args.config else {}
    tree = apply_overrides(tree, args.override)
    if args.seed is not None:
        tree["seed"] = args.seed
    if args.out is not None:
        tree["out"] = args.out
    return tree


# ============== COMMANDS ==============

def cmd_gen_data(args: argparse.Namespace) -> int:
    from services.dataset_service import DatasetService

    tree = load_tree(args)
    seed = int(tree.get("seed", 0))
    out = tree.get("out", "runs/gen-data")
    section = tree.get("dataset")
    if section is None:
        if args.generator is None:
            raise DecompError("gen-data needs --config with a dataset section or --generator")
        section = {"source": args.generator}
    dataset_cfg = validate_config(DatasetConfig, section, args.config)
    service = DatasetService()
    dataset = service.load(dataset_cfg, RandomStreams(seed).get(DATA))
    files = service.write(dataset, out, binary=dataset.provenance.startswith("factor-images"))
    RunRepository().write_manifest(out, files, {"seed": seed, "dataset": dataset_cfg.model_dump(mode="json")})
    print(f"wrote {dataset.num_rows} x {dataset.dim} {dataset.provenance} -> {out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    from services.training_service import TrainingService

    config = validate_config(ExperimentConfig, load_tree(args), args.config)
    result = TrainingService().train(config)
    last = result.history[-1]
    print(f"run: {result.run_dir}")
    print("final epoch: " + ", ".join(f"{k}={v:.6g}" for k, v in last.items()))
    for row in result.metrics:
        if row["epoch"] == config.epochs:
            print(f"  {row['metric']:<24s} {row['value']:.6g} (se {row['std_error']:.2g})")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from services.evaluation_service import EvaluationService

    metrics: Optional[List[str]] = None
    if args.metrics:
        metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    result = EvaluationService().evaluate_run(Path(args.run), metrics, args.seed)
    for row in result.rows:
        print(f"{row['metric']:<24s} {row['value']:.6g} (se {row['std_error']:.2g})")
    if result.class_table is not None:
        print(f"class magnitudes: {result.class_table.shape[0]} classes x {result.class_table.shape[1]} dims")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from services.verification_service import VerificationService, render_text

    config = validate_config(VerificationConfig, load_tree(args), args.config)
    service = VerificationService()
    report, trials = service.run(config)
    out = service.write(config, report, trials)
    print(render_text(report), end="")
    print(f"report: {out}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_bias_study(args: argparse.Namespace) -> int:
    from services.bias_study_service import BiasStudyService, render_table

    config = validate_config(BiasStudyConfig, load_tree(args), args.config)
    service = BiasStudyService()
    rows = service.run(config)
    out = service.write(config, rows)
    print(render_table(rows), end="")
    print(f"table: {out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("main:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "bias-study": cmd_bias_study,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)

    try:
        return COMMANDS[args.command](args)
    except NumericError as e:
        logger.error(f"[CLI] numeric failure: {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DecompError, ValueError, OSError) as e:
        logger.error(f"[CLI] {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
