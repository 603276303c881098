"""
Command-line interface: rfi generate | train | attack | evaluate | certify |
margin-curve | selftest.

Exit codes: 0 success, 1 validation error (including bad usage), 2 runtime failure.
"""

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .core.aggregators import AggregatorFactory
from .core.attacks import parse_attacks
from .core.config import Settings, load_settings
from .core.exceptions import RobustInferenceError, ValidationError
from .core.logging_config import configure_logging
from .core.models import DEFAULT_MODEL_NAME, AggregatorKind, SystemParams
from .core.nn.deepset import DeepSetModel
from .core.rng import RngStreams
from .repositories.dataset_repository import ingest_panels, save_dataset
from .repositories.model_repository import ModelRepository
from .repositories.report_repository import trace_frame, write_frame, write_report
from .services.attack_service import attacked_dataset
from .services.evaluation_service import EvaluationService, certify_dataset
from .services.selftest_service import run_selftest
from .services.synthetic_service import generate_synthetic
from .services.training_service import adversarial_train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DATASET_FILE = "dataset.txt"
ATTACKED_FILE = "attacked.txt"
MODEL_FILE = "model.json"
TRACE_FILE = "trace.csv"
CERTIFICATE_FILE = "certificates.csv"
CERTIFICATE_SUMMARY_FILE = "certificate_summary.json"
CURVE_FILE = "margin_curve.csv"


class UsageError(ValidationError):
    """Bad command-line usage."""
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with status 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _common_flags(nested: bool) -> ArgumentParser:
    """Flags accepted both before and after the command name.

    The copy attached to subcommands suppresses its defaults so that a value
    given before the command survives.
    """
    def default(value: Any) -> Any:
        return argparse.SUPPRESS if nested else value

    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default(None), help="Root random seed")
    common.add_argument("--config", default=default(None), help="Key=value settings file")
    common.add_argument("--out", default=default("out"), help="Output directory (default: out)")
    common.add_argument("--log-level", default=default(None), help="DEBUG, INFO, WARNING or ERROR")
    return common


def build_parser() -> ArgumentParser:
    common = _common_flags(nested=True)
    parser = ArgumentParser(
        prog="rfi",
        parents=[_common_flags(nested=False)],
        description="Robust federated inference: aggregation, attacks, training and evaluation",
    )
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    commands.required = True

    generate = commands.add_parser("generate", parents=[common], help="Generate a synthetic dataset")
    generate.add_argument("--n", type=int, dest="n_clients", help="Number of clients")
    generate.add_argument("--K", type=int, dest="num_classes", help="Number of classes")
    generate.add_argument("--alpha", type=float, help="Dirichlet concentration")
    generate.add_argument("--samples", type=int, help="Number of panels")
    generate.add_argument("--f", type=int, dest="num_adversaries", help="Adversary bound checked against --n")

    train = commands.add_parser("train", parents=[common], help="Adversarially train a DeepSet")
    train.add_argument("--data", required=True, help="Panel file")
    train.add_argument("--f", type=int, help="Adversary bound (0 trains on clean panels)")
    train.add_argument("--steps", type=int, dest="train_steps", help="Outer steps E")
    train.add_argument("--epochs", type=float, dest="train_epochs", help="Epochs when --steps is unset")
    train.add_argument("--init", help="Checkpoint to start from instead of a fresh model")

    attack = commands.add_parser("attack", parents=[common], help="Corrupt a dataset")
    attack.add_argument("--data", required=True, help="Panel file")
    attack.add_argument("--attack", required=True, help="Attack name")
    attack.add_argument("--f", type=int, help="Adversaries per panel")
    attack.add_argument("--target", default="cwtm", help="Aggregator attacked by white-box attacks")
    attack.add_argument("--model", action="append", default=[], help="NAME=PATH or PATH of a checkpoint")
    attack.add_argument("--similarity", help="Class similarity file")
    attack.add_argument("--policy", dest="adversary_policy", help="fixed or per-query")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Evaluate aggregators under attack")
    evaluate.add_argument("--data", required=True, help="Panel file")
    evaluate.add_argument("--aggregators", help="Comma-separated aggregator labels")
    evaluate.add_argument("--attacks", help="'all' or comma-separated attack names")
    evaluate.add_argument("--f", type=_int_list, help="Adversary counts, e.g. 0,2,4")
    evaluate.add_argument("--seeds", type=int, dest="eval_seeds", help="Number of seeds")
    evaluate.add_argument("--model", action="append", default=[], help="NAME=PATH or PATH of a checkpoint")
    evaluate.add_argument("--similarity", help="Class similarity file")
    evaluate.add_argument("--policy", dest="adversary_policy", help="fixed or per-query")

    certify = commands.add_parser("certify", parents=[common], help="Certify panels for CWTM")
    certify.add_argument("--data", required=True, help="Panel file")
    certify.add_argument("--f", type=int, help="Adversary bound")

    curve = commands.add_parser("margin-curve", parents=[common], help="Margin/sigma vs error table")
    curve.add_argument("--alphas", type=_float_list, default=[0.1, 1.0, 10.0], help="Dirichlet values")
    curve.add_argument("--f", type=_int_list, default=[0, 2, 4], help="Adversary counts")
    curve.add_argument("--seeds", type=int, dest="eval_seeds", help="Datasets per alpha")

    commands.add_parser("selftest", parents=[common], help="Run the oracle and property suite")
    return parser


def _settings(args: argparse.Namespace, extra: Sequence[str] = ()) -> Settings:
    overrides: Dict[str, Any] = {"seed": args.seed, "log_level": args.log_level}
    for name in extra:
        overrides[name] = getattr(args, name, None)
    return load_settings(args.config, overrides)


def _load_models(specs: Sequence[str]) -> Dict[str, DeepSetModel]:
    models: Dict[str, DeepSetModel] = {}
    repository = ModelRepository()
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = DEFAULT_MODEL_NAME, spec
        name = name.strip().lower()
        if name in models:
            raise ValidationError(f"model '{name}' given twice")
        models[name] = repository.load(path)
    return models


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_generate(args: argparse.Namespace) -> int:
    settings = _settings(args, ("n_clients", "num_classes", "alpha", "samples", "num_adversaries"))
    dataset = generate_synthetic(settings.synthetic_spec())
    path = save_dataset(dataset, Path(args.out) / DATASET_FILE)
    print(f"✅ {len(dataset)} panels written to {path}")
    print(f"🔑 sha256 {_digest(path)}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    settings = _settings(args, ("train_steps", "train_epochs"))
    dataset = ingest_panels(args.data)
    f = settings.num_adversaries if args.f is None else args.f
    config = settings.train_config(f)
    if args.init:
        model = ModelRepository().load(args.init)
    else:
        model = DeepSetModel.init(dataset.num_classes, RngStreams(settings.seed).stream("init"),
                                  p=settings.embedding_width, hidden=settings.hidden_width)
    model, trace = adversarial_train(model, dataset, config)
    out = Path(args.out)
    path = ModelRepository().save(model, out / MODEL_FILE, seed=settings.seed)
    write_frame(trace_frame(trace), out / TRACE_FILE)
    print(f"✅ Model written to {path} after {len(trace)} steps")
    return EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    settings = _settings(args, ("adversary_policy",))
    dataset = ingest_panels(args.data, args.similarity)
    f = settings.num_adversaries if args.f is None else args.f
    kinds = parse_attacks(args.attack)
    if len(kinds) != 1:
        raise ValidationError("attack takes exactly one attack name")
    kind = kinds[0]
    target = None
    if not kind.black_box:
        factory = AggregatorFactory.from_settings(settings, f, _load_models(args.model), dataset.n)
        target = factory.create(AggregatorKind.parse(args.target, settings.ra_rounds,
                                                     settings.ra_inner_trim))
    rng = RngStreams(settings.seed).stream("attack", f)
    corrupted = attacked_dataset(dataset, settings.attack_config(kind, dataset.similarity), f,
                                 settings.policy, rng, target)
    path = save_dataset(corrupted, Path(args.out) / ATTACKED_FILE)
    print(f"✅ {kind.value} corrupted dataset written to {path}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    settings = _settings(args, ("aggregators", "attacks", "eval_seeds", "adversary_policy"))
    dataset = ingest_panels(args.data, args.similarity)
    f_values = args.f if args.f else [settings.num_adversaries]
    explicit = settings.attacks.strip().lower() != "all"
    service = EvaluationService(settings, _load_models(args.model))
    report = service.evaluate(
        dataset,
        [label for label in settings.aggregators.split(",") if label.strip()],
        parse_attacks(settings.attacks),
        f_values,
        settings.eval_seeds,
        explicit_attacks=explicit,
    )
    write_report(report, args.out)
    for summary in report.summaries:
        print(f"📊 f={summary.f} {summary.aggregator:<16} clean {summary.clean_accuracy:6.2f}  "
              f"worst {summary.worst_case:6.2f} ({summary.worst_attack})")
    violations = sum(c.soundness_violations for c in report.certificates)
    if violations:
        print(f"❌ {violations} certificate soundness violations")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    settings = _settings(args)
    dataset = ingest_panels(args.data)
    f = settings.num_adversaries if args.f is None else args.f
    params = SystemParams(dataset.n, f, dataset.num_classes)
    frame, summary = certify_dataset(dataset, params, settings.tie_quantum)
    out = Path(args.out)
    write_frame(frame, out / CERTIFICATE_FILE)
    (out / CERTIFICATE_SUMMARY_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8")
    print(f"📜 {100 * summary['certified_fraction']:.2f}% certified "
          f"({summary['certified']}/{summary['panels']}, {summary['degenerate']} degenerate)")
    return EXIT_OK


def cmd_margin_curve(args: argparse.Namespace) -> int:
    settings = _settings(args, ("eval_seeds",))
    service = EvaluationService(settings)
    frame = service.margin_error_curve(args.f, args.alphas, settings.eval_seeds)
    path = write_frame(frame, Path(args.out) / CURVE_FILE)
    print(f"✅ Margin/error curve written to {path}")
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    settings = _settings(args)
    results = run_selftest(settings.seed)
    for result in results:
        print(f"{'✅' if result.passed else '❌'} {result.name}: {result.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "certify": cmd_certify,
    "margin-curve": cmd_margin_curve,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _settings(args)
        configure_logging(settings.log_level, settings.log_file)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as e:
        logger.error(f"❌ Validation error: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except RobustInferenceError as e:
        logger.error(f"❌ {e.__class__.__name__}: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"❌ Unexpected error: {e}", exc_info=True)
        print(f"❌ Unexpected error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
