"""
Command-line interface: `lureid <command> [flags]`.

Every flag can also be given through the environment as LUREID_<FLAG>, e.g.
LUREID_EPOCHS=100 for --epochs. Explicit flags win over the environment, and both
win over a `--config` file (YAML, or the config.json of an earlier run).

Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or invalid input
files, 3 infeasible semidefinite program, 4 numerical failure or aborted training.
"""

import argparse
import concurrent.futures
import json
import logging
import os
import pathlib
import sys
from typing import Dict, List, Optional

import numpy as np
import yaml

from lureid import __version__, datasets
from lureid.certificate.certificate import CERTIFICATE_SCHEMA_VERSION, Certificate, check_certificate
from lureid.datasets import DATASET_SCHEMA_VERSION, GenConfig
from lureid.model.model import MODEL_SCHEMA_VERSION, Dimensions, ModelParams
from lureid.reporting.report import (
    EVAL_REPORT_SCHEMA_VERSION,
    evaluate,
    phase_table,
    polytope_table,
    predict,
    region_table,
    summary_table,
)
from lureid.sdp.problem import SDP_DUMP_SCHEMA_VERSION, SolverSettings
from lureid.sdp.programs import INIT_OBJECTIVES, initialize, post_process, region_problem
from lureid.trainer.parameters import MODES
from lureid.trainer.trainer import TrainConfig, train
from lureid.utils.exceptions import (
    ConfigurationError,
    DatasetFormatError,
    DatasetValidationError,
    InfeasibleError,
    NonFiniteError,
    NumericalFailureError,
    SchemaVersionError,
    TrainingAbortedError,
)
from lureid.utils.io import content_hash, write_json

logger = logging.getLogger(__name__)

ENV_PREFIX = "LUREID_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

GEN_FLAGS = [f.name for f in GenConfig.__dataclass_fields__.values()]
TRAIN_FLAGS = [f.name for f in TrainConfig.__dataclass_fields__.values()]
SOLVER_FLAGS = ["solver", "tol_feas", "max_iter", "margin"]

_TRUE = {"1", "true", "yes", "on"}


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that reports usage errors with exit code 1."""

    def error(self, message):
        """Print usage and exit with EXIT_USAGE."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version_string() -> str:
    return (
        f"lureid {__version__} (schemas: model {MODEL_SCHEMA_VERSION}, certificate {CERTIFICATE_SCHEMA_VERSION}, "
        f"dataset {DATASET_SCHEMA_VERSION}, report {EVAL_REPORT_SCHEMA_VERSION}, sdp dump {SDP_DUMP_SCHEMA_VERSION})"
    )


def _add_solver_flags(parser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--solver", help="cvxpy conic solver (default CLARABEL)")
    group.add_argument("--tol-feas", type=float, help="solver feasibility tolerance")
    group.add_argument("--max-iter", type=int, help="solver iteration limit")
    group.add_argument("--margin", type=float, help="strictness margin of every LMI")


def _add_train_flags(parser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--epochs", type=int)
    group.add_argument("--batch-size", type=int)
    group.add_argument("--learning-rate", type=float)
    group.add_argument("--adam-beta1", type=float)
    group.add_argument("--adam-beta2", type=float)
    group.add_argument("--adam-eps", type=float)
    group.add_argument("--nu0", type=float, help="initial barrier weight")
    group.add_argument("--nu-decay", type=float, help="barrier weight decay per epoch")
    group.add_argument("--nu-min", type=float)
    group.add_argument("--delta", type=float, help="input bound; defaults to the dataset's")
    group.add_argument("--check-every", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--rollback-limit", type=int)
    group.add_argument("--max-halvings", type=int)
    group.add_argument("--n-states", type=int)
    group.add_argument("--n-channels", type=int)
    group.add_argument("--init-beta", type=float, help="radius of a ball the initial region must contain")


def build_parser() -> ArgumentParser:
    """The argument parser of the `lureid` command."""
    parser = ArgumentParser(prog="lureid", description="Identification of regionally stable Lur'e models.")
    parser.add_argument("--version", action="version", version=_version_string())
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    commands.required = True

    p = commands.add_parser("generate", help="simulate the data-generating system")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="GenConfig YAML file")
    p.add_argument("--n-sin", type=int)
    p.add_argument("--n-noise", type=int)
    p.add_argument("--n-sin-zero", type=int)
    p.add_argument("--n-noise-zero", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--x0-range", type=float)
    p.add_argument("--alpha-true", type=float)
    p.add_argument("--s-true", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--with-test", action="store_true", help="also write an independent test set")
    p.add_argument("--no-csv", action="store_true", help="skip the per-trajectory CSV export")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_generate)

    p = commands.add_parser("init", help="feasible initial model and certificate")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--data", help="dataset JSON; sets delta and the dimensions r, e")
    p.add_argument("--delta", type=float)
    p.add_argument("--n-states", type=int, default=2)
    p.add_argument("--n-inputs", type=int, default=1)
    p.add_argument("--n-outputs", type=int, default=1)
    p.add_argument("--n-channels", type=int, default=2)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objective", choices=INIT_OBJECTIVES, default="feasibility")
    p.add_argument("--mode", choices=("gensec", "stdsec"), default="gensec")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_init)

    p = commands.add_parser("train", help="train a model into a run directory")
    p.add_argument("--data", required=True, help="dataset JSON")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--config", help="TrainConfig YAML, or the config.json of an earlier run")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--init-model", help="model.json to start from")
    p.add_argument("--init-certificate", help="certificate.json to start from")
    _add_train_flags(p)
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("analyze", help="maximize the certified region of a model")
    p.add_argument("--model", required=True, help="model.json")
    p.add_argument("--certificate", help="certificate.json; supplies alpha and is rewritten")
    p.add_argument("--alpha", type=float, help="contraction rate; overrides the certificate's")
    p.add_argument("--data", help="dataset JSON supplying delta")
    p.add_argument("--delta", type=float)
    p.add_argument("--out", help="output directory; defaults to the certificate's directory")
    p.add_argument("--stdsec", action="store_true", help="restrict to L = 0")
    p.add_argument("--count", type=int, default=200, help="points on the region boundary")
    p.add_argument("--dump-sdp", help="write the conic program as JSON")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_analyze)

    p = commands.add_parser("eval", help="evaluate a model on a dataset")
    p.add_argument("--model", required=True, help="model.json")
    p.add_argument("--certificate", help="certificate.json")
    p.add_argument("--data", required=True, help="dataset JSON")
    p.add_argument("--mode", choices=MODES, help="defaults to gensec with a certificate, nosec without")
    p.add_argument("--delta", type=float)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_eval)

    p = commands.add_parser("compare", help="train and evaluate gensec, stdsec and nosec")
    p.add_argument("--data", required=True, help="training dataset JSON")
    p.add_argument("--test", help="test dataset JSON; defaults to the training data")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="TrainConfig YAML shared by the three runs")
    p.add_argument("--modes", nargs="+", choices=MODES, default=list(MODES))
    p.add_argument("--jobs", type=int, default=1, help="runs trained concurrently")
    p.add_argument("--no-analyze", action="store_true", help="skip region maximization after training")
    _add_train_flags(p)
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_compare)
    return parser


def _subparsers(parser) -> List[argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return list(action.choices.values())
    return []


def _env_value(action, raw: str):
    if action.nargs == 0:
        return raw.strip().lower() in _TRUE
    if action.nargs in ("+", "*"):
        return [action.type(v) if action.type else v for v in raw.split()]
    return action.type(raw) if action.type else raw


def apply_environment(parser, environ=None) -> None:
    """Turn LUREID_<FLAG> variables into defaults of the matching flags."""
    environ = os.environ if environ is None else environ
    for sub in _subparsers(parser):
        for action in sub._actions:
            if not action.option_strings or action.dest in ("help", "handler"):
                continue
            key = ENV_PREFIX + action.dest.upper()
            if key not in environ:
                continue
            try:
                value = _env_value(action, environ[key])
            except ValueError as e:
                raise ConfigurationError(f"{key}: {e}") from e
            sub.set_defaults(**{action.dest: value})
            action.required = False


def _read_config_document(path) -> Dict:
    with open(path) as f:
        doc = yaml.safe_load(f) or {}
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a mapping")
    return doc


def _load_config_file(path, section: str) -> Dict:
    doc = _read_config_document(path)
    if section in doc:
        return doc[section]
    return {k: v for k, v in doc.items() if k != "solver_settings"}


def _config(cls, args, names, section: str):
    base = _load_config_file(args.config, section) if getattr(args, "config", None) else {}
    overrides = {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}
    return cls.from_dict({**base, **overrides})


def _settings(args) -> SolverSettings:
    """Solver settings from the flags, over the `solver_settings` of a --config run record."""
    base = {}
    if getattr(args, "config", None):
        base = _read_config_document(args.config).get("solver_settings") or {}
    overrides = {k: getattr(args, k) for k in SOLVER_FLAGS if getattr(args, k, None) is not None}
    return SolverSettings.from_dict({**base, **overrides})


def _dataset_record(path) -> Dict:
    return {"path": str(path), "sha1": content_hash(path)}


def cmd_generate(args) -> int:
    """Write dataset.json (and test.json with --with-test) plus CSV exports."""
    config = _config(GenConfig, args, GEN_FLAGS, "gen_config")
    settings = _settings(args)
    out = pathlib.Path(args.out)
    with_test = args.with_test or bool(args.config and _read_config_document(args.config).get("with_test"))
    configs = {"dataset": config}
    if with_test:
        configs["dataset"], configs["test"] = datasets.train_test_split_configs(config)
    outputs = {}
    for name, cfg in configs.items():
        data = datasets.generate(cfg, settings=settings)
        datasets.save(data, out / f"{name}.json")
        outputs[name] = _dataset_record(out / f"{name}.json")
        if not args.no_csv:
            datasets.export_csv(data, out / f"{name}_csv")
        print(f"{name}: {len(data)} trajectories, {data.n_points} points, delta={data.delta!r}, s_true={data.s_true!r}")
    write_json(
        {
            "lureid_version": __version__,
            "gen_config": config.as_dict(),
            "solver_settings": settings.as_dict(),
            "with_test": with_test,
            "outputs": outputs,
        },
        out / "config.json",
    )
    return EXIT_OK


def cmd_init(args) -> int:
    """Write model.json and certificate.json of a feasible starting point."""
    r, e, delta = args.n_inputs, args.n_outputs, args.delta
    if args.data:
        data = datasets.load(args.data)
        r, e = data.trajectories[0].u.shape[1], data.trajectories[0].y.shape[1]
        delta = data.delta if delta is None else delta
    if delta is None:
        raise ConfigurationError("pass --delta or --data")
    dims = Dimensions(n=args.n_states, r=r, e=e, m=args.n_channels)
    params, cert = initialize(
        dims,
        delta,
        beta=args.beta,
        seed=args.seed,
        settings=_settings(args),
        objective=args.objective,
        fix_L_zero=args.mode == "stdsec",
    )
    out = pathlib.Path(args.out)
    params.save_json(out / "model.json")
    cert.save_json(out / "certificate.json")
    print(f"initialized: s={cert.s!r}, alpha={cert.alpha!r}, delta={delta!r}")
    return EXIT_OK


def _initial_point(args):
    if not getattr(args, "init_model", None):
        return None
    params = ModelParams.load_json(args.init_model)
    cert = Certificate.load_json(args.init_certificate) if args.init_certificate else None
    return params, cert


def _write_run(run_dir, config: TrainConfig, settings: SolverSettings, data_path, result, extra=None) -> None:
    run_dir = pathlib.Path(run_dir)
    write_json(
        {
            "lureid_version": __version__,
            "train_config": config.as_dict(),
            "solver_settings": settings.as_dict(),
            "dataset": _dataset_record(data_path),
            "delta": result.delta,
            **(extra or {}),
        },
        run_dir / "config.json",
    )
    result.history.to_csv(run_dir / "history.csv", index=False, float_format="%.17g")
    result.params.save_json(run_dir / "model.json")
    if result.certificate is not None:
        result.certificate.save_json(run_dir / "certificate.json")


def cmd_train(args) -> int:
    """Train into a run directory: config.json, history.csv, model.json, certificate.json."""
    config = _config(TrainConfig, args, TRAIN_FLAGS, "train_config")
    settings = _settings(args)
    dataset = datasets.load(args.data)
    init = _initial_point(args)
    result = train(dataset, config, init=init, settings=settings)
    extra = {"init": {"model": args.init_model, "certificate": args.init_certificate}} if init else None
    _write_run(args.out, config, settings, args.data, result, extra)
    final = result.history.iloc[-1]
    print(f"{config.mode}: {config.epochs} epochs, final mse {final['mse']:.6g}")
    return EXIT_OK


def _analysis_inputs(args):
    params = ModelParams.load_json(args.model)
    cert = Certificate.load_json(args.certificate) if args.certificate else None
    alpha = args.alpha if args.alpha is not None else (cert.alpha if cert is not None else None)
    if alpha is None:
        raise ConfigurationError("pass --alpha or --certificate")
    delta = args.delta
    if delta is None and args.data:
        delta = datasets.load(args.data).delta
    if delta is None:
        raise ConfigurationError("pass --delta or --data")
    return params, alpha, delta


def cmd_analyze(args) -> int:
    """Maximize the region; write certificate.json, report.json, region.csv and polytope.csv."""
    params, alpha, delta = _analysis_inputs(args)
    settings = _settings(args)
    if args.out:
        out = pathlib.Path(args.out)
    elif args.certificate:
        out = pathlib.Path(args.certificate).parent
    else:
        raise ConfigurationError("pass --out or --certificate")
    if args.dump_sdp:
        region_problem(params, alpha, delta, settings, fix_L_zero=args.stdsec).dump(args.dump_sdp, settings)
    cert = post_process(params, alpha, delta, settings=settings, fix_L_zero=args.stdsec)
    cert.save_json(out / "certificate.json")
    write_json(check_certificate(params, cert, delta).as_dict(), out / "report.json")
    if cert.n == 2:
        region_table(cert, count=args.count).to_csv(out / "region.csv", index=False, float_format="%.17g")
        polytope_table(cert).to_csv(out / "polytope.csv", index=False, float_format="%.17g")
    else:
        logger.warning(f"region and polytope exports need n = 2, the model has n = {cert.n}")
    print(f"s={cert.s!r} at alpha={alpha!r}, delta={delta!r}, max|L|={float(np.abs(cert.L).max()):.6g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    """Write report.json and phase.csv."""
    params = ModelParams.load_json(args.model)
    cert = Certificate.load_json(args.certificate) if args.certificate else None
    mode = args.mode or ("gensec" if cert is not None else "nosec")
    dataset = datasets.load(args.data)
    predictions = predict(params, dataset)
    report = evaluate(params, cert, dataset, mode=mode, delta=args.delta, predictions=predictions)
    out = pathlib.Path(args.out)
    report.save_json(out / "report.json")
    phase_table(predictions).to_csv(out / "phase.csv", index=False, float_format="%.17g")
    print(json.dumps(report.as_dict(), indent=1))
    return EXIT_OK


def _compare_run(mode: str, data_path: str, config: Dict, settings: Dict, run_dir: str, analyze: bool):
    """Train one mode into its run directory; returns (params, certificate) as dicts."""
    train_config = TrainConfig.from_dict({**config, "mode": mode})
    solver_settings = SolverSettings.from_dict(settings)
    result = train(datasets.load(data_path), train_config, settings=solver_settings)
    extra = {}
    if analyze and result.certificate is not None:
        try:
            result.certificate = post_process(
                result.params,
                result.certificate.alpha,
                result.delta,
                settings=solver_settings,
                fix_L_zero=mode == "stdsec",
            )
            extra["post_processed"] = True
        except (InfeasibleError, NumericalFailureError) as e:
            logger.warning(f"{mode}: region maximization failed ({e}); keeping the training certificate")
            extra["post_processed"] = False
    _write_run(run_dir, train_config, solver_settings, data_path, result, extra)
    cert = None if result.certificate is None else result.certificate.as_dict()
    return result.params.as_dict(), cert, result.delta


def cmd_compare(args) -> int:
    """Train every mode on one dataset, evaluate on the test set and write summary.csv."""
    config = _config(TrainConfig, args, TRAIN_FLAGS, "train_config").as_dict()
    settings = _settings(args).as_dict()
    out = pathlib.Path(args.out)
    test = datasets.load(args.test or args.data)
    jobs = {mode: (mode, args.data, config, settings, str(out / mode), not args.no_analyze) for mode in args.modes}
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {mode: pool.submit(_compare_run, *job) for mode, job in jobs.items()}
            outcomes = {mode: future.result() for mode, future in futures.items()}
    else:
        outcomes = {mode: _compare_run(*job) for mode, job in jobs.items()}

    reports = []
    for mode in args.modes:
        params_doc, cert_doc, delta = outcomes[mode]
        params = ModelParams.from_dict(params_doc)
        cert = None if cert_doc is None else Certificate.from_dict(cert_doc)
        report = evaluate(params, cert, test, mode=mode, delta=delta)
        report.save_json(out / mode / "report.json")
        reports.append(report)
    summary = summary_table(reports)
    summary.to_csv(out / "summary.csv", index=False, float_format="%.17g")
    print(summary.to_string(index=False))
    return EXIT_OK


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the exit code."""
    parser = build_parser()
    try:
        apply_environment(parser)
        args = parser.parse_args(argv)
    except ConfigurationError as e:
        print(f"lureid: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)
    _configure_logging(args.verbose)

    try:
        return args.handler(args)
    except InfeasibleError as e:
        print(f"lureid: infeasible: {e} (failing LMI: {e.lmi or 'unknown'})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailureError, TrainingAbortedError, NonFiniteError) as e:
        print(f"lureid: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, yaml.YAMLError, DatasetFormatError, SchemaVersionError, DatasetValidationError) as e:
        print(f"lureid: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigurationError as e:
        print(f"lureid: error: {e}", file=sys.stderr)
        return EXIT_USAGE
