"""Command-line driver: train, predict, and eval subcommands.

Exit codes: 0 ok, 1 usage error, 2 data/model error, 3 numeric failure.
All validation happens before any output file is touched.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from typing import IO

import numpy as np

from .data import DataFormatError, Dataset, load_libsvm
from .kernels import (
    DegenerateKernelError,
    GaussianKernel,
    build_fourier,
    build_nystrom,
)
from .linalg import ConvergenceError
from .model import Model, ModelFormatError, decide, load_model, predict_label, recover_alpha, save_model
from .oracle import feature_objective
from .solver import (
    SolverParams,
    TrivialRegressionError,
    asset_train,
    feasible_region,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

TASK_BY_FLAG = {"class": "classification", "regress": "regression"}
VARIANT_BY_FLAG = {"averaged": "averaged", "strong": "strongly_convex"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    data: str | None = None
    eval_data: str | None = None
    model: str | None = None
    pred: str | None = None
    out: str | None = None
    metrics: str | None = None
    task: str | None = None
    approx: str | None = None
    sample_size: int | None = None
    dim: int | None = None
    eps_d: float = 1e-16
    sigma: float = 1.0
    lam: float = 1e-3
    epsilon: float = 0.0
    iters: int | None = None
    epochs: float | None = None
    nbar: int | None = None
    variant: str = "averaged"
    no_bias: bool = False
    intercept_bound: float | None = None
    dg_sample: int = 1000
    seed: int = 0
    checks_per_epoch: int = 10
    timing: str = "off"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="assetsvm",
        description="Train and apply Gaussian-kernel SVMs over low-dimensional kernel approximations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model and write it to disk")
    train.add_argument("--task", choices=sorted(TASK_BY_FLAG), required=True)
    train.add_argument("--approx", choices=("nystrom", "fourier"), required=True)
    train.add_argument("--data", required=True, help="libsvm training file")
    train.add_argument("--model", required=True, help="output model path")
    train.add_argument("--s", type=int, dest="sample_size", help="landmark sample size (nystrom)")
    train.add_argument("--d", type=int, dest="dim", help="feature dimension")
    train.add_argument("--eps-d", type=float, default=1e-16, help="eigenvalue retention threshold")
    train.add_argument("--sigma", type=float, default=1.0, help="Gaussian kernel width parameter")
    train.add_argument("--lambda", type=float, default=1e-3, dest="lam", help="regularization weight")
    train.add_argument("--epsilon", type=float, default=0.0, help="regression tube half-width")
    train.add_argument("--iters", type=int, help="iteration budget")
    train.add_argument("--epochs", type=float, help="epoch budget (iterations = epochs * m)")
    train.add_argument("--nbar", type=int, help="iteration at which averaging starts")
    train.add_argument("--variant", choices=sorted(VARIANT_BY_FLAG), default="averaged")
    train.add_argument("--no-bias", action="store_true", help="drop the intercept")
    train.add_argument("--B", type=float, dest="intercept_bound", help="intercept interval half-width")
    train.add_argument("--dg-sample", type=int, default=1000, help="gradient-norm probe size")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--eval-data", help="held-out libsvm file scored at checkpoints")
    train.add_argument("--metrics", help="CSV path for checkpoint rows")
    train.add_argument("--checks-per-epoch", type=int, default=10)
    train.add_argument(
        "--timing",
        choices=("off", "wall"),
        default="off",
        help="seconds column source for metrics; 'off' writes 0.0 so outputs are byte-reproducible",
    )

    predict = sub.add_parser("predict", help="score a libsvm file with a saved model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--out", help="output path (default: stdout)")

    evaluate = sub.add_parser("eval", help="error rate of a model or of saved predictions")
    evaluate.add_argument("--data", required=True, help="labeled libsvm file")
    evaluate.add_argument("--model", help="model to score with")
    evaluate.add_argument("--pred", help="predictions file from the predict command")
    evaluate.add_argument("--task", choices=sorted(TASK_BY_FLAG), help="required with --pred")
    evaluate.add_argument("--epsilon", type=float, default=0.0, help="regression tube half-width")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(command=args.command)
    for name in vars(args):
        if name != "command" and hasattr(config, name):
            setattr(config, name, getattr(args, name))
    if getattr(args, "task", None) is not None:
        config.task = TASK_BY_FLAG[args.task]
    if getattr(args, "variant", None) is not None:
        config.variant = VARIANT_BY_FLAG[args.variant]
    return config


def _validate_train(config: RunConfig) -> None:
    if config.sigma <= 0.0:
        raise UsageError("--sigma must be positive")
    if config.lam <= 0.0:
        raise UsageError("--lambda must be positive")
    if config.epsilon < 0.0:
        raise UsageError("--epsilon must be nonnegative")
    if config.eps_d <= 0.0:
        raise UsageError("--eps-d must be positive")
    if config.seed < 0:
        raise UsageError("--seed must be nonnegative")
    if config.dg_sample < 1:
        raise UsageError("--dg-sample must be >= 1")
    if config.checks_per_epoch < 1:
        raise UsageError("--checks-per-epoch must be >= 1")
    if config.iters is not None and config.epochs is not None:
        raise UsageError("give --iters or --epochs, not both")
    if config.iters is not None and config.iters < 1:
        raise UsageError("--iters must be >= 1")
    if config.epochs is not None and config.epochs <= 0:
        raise UsageError("--epochs must be positive")
    if config.nbar is not None and config.nbar < 1:
        raise UsageError("--nbar must be >= 1")
    if config.intercept_bound is not None and config.intercept_bound < 0:
        raise UsageError("--B must be nonnegative")
    if config.approx == "fourier":
        if config.dim is None or config.dim < 1:
            raise UsageError("fourier approximation needs --d >= 1")
        if config.sample_size is not None:
            raise UsageError("--s applies only to the nystrom approximation")
    else:
        if config.sample_size is None or config.sample_size < 1:
            raise UsageError("nystrom approximation needs --s >= 1")
        if config.dim is not None and not (1 <= config.dim <= config.sample_size):
            raise UsageError("--d must satisfy 1 <= d <= s")
    if config.variant == "strongly_convex" and not config.no_bias:
        raise UsageError("--variant strong requires --no-bias")
    if config.epsilon > 0.0 and config.task == "classification":
        raise UsageError("--epsilon applies only to regression")


def _eval_error(
    model: Model, data: Dataset, epsilon: float
) -> float:
    if data.task == "classification" or model.task == "classification":
        wrong = sum(
            1 for x, y in zip(data.examples, data.labels) if predict_label(model, x) != int(y)
        )
        return wrong / data.m
    losses = [
        max(abs(float(y) - decide(model, x)) - epsilon, 0.0)
        for x, y in zip(data.examples, data.labels)
    ]
    return float(np.mean(losses))


def cmd_train(config: RunConfig) -> int:
    _validate_train(config)
    data = load_libsvm(config.data, config.task)
    if data.m < 1:
        raise DataFormatError("training file contains no examples")
    if config.approx == "nystrom" and config.sample_size > data.m:
        raise DataFormatError(
            f"--s {config.sample_size} exceeds the {data.m} training examples"
        )
    eval_data = None
    if config.eval_data is not None:
        eval_data = load_libsvm(config.eval_data, config.task, n_override=data.n)
        if eval_data.m < 1:
            raise DataFormatError("evaluation file contains no examples")

    iterations = (
        config.iters
        if config.iters is not None
        else max(1, round((config.epochs if config.epochs is not None else 10.0) * data.m))
    )
    nbar = config.nbar if config.nbar is not None else max(1, iterations - 100)
    if nbar > iterations:
        raise UsageError("--nbar must not exceed the iteration budget")

    kernel = GaussianKernel(config.sigma)
    region = feasible_region(
        config.task,
        config.lam,
        data.labels,
        epsilon=config.epsilon,
        intercept_bound=config.intercept_bound,
        include_bias=not config.no_bias,
    )
    params = SolverParams(
        lam=config.lam,
        iterations=iterations,
        avg_start=nbar,
        variant=config.variant,
        dg_sample=config.dg_sample,
        epsilon=config.epsilon,
        seed=config.seed,
    )
    if config.approx == "nystrom":
        dim = config.dim if config.dim is not None else config.sample_size
        feature_map = build_nystrom(
            data, kernel, config.sample_size, dim, eps_d=config.eps_d, seed=config.seed
        )
    else:
        if data.n < 1:
            raise DataFormatError("training data has no features")
        feature_map = build_fourier(data.n, config.dim, kernel, seed=config.seed)

    metrics_handle: IO[str] | None = None
    on_checkpoint = None
    checkpoint_every = None
    if config.metrics is not None:
        metrics_handle = open(config.metrics, "w", encoding="utf-8", newline="")
        metrics_handle.write("iteration,seconds,objective,eval_error\n")
        checkpoint_every = max(1, round(data.m / config.checks_per_epoch))
        start = time.perf_counter()

        def on_checkpoint(j: int, gamma: np.ndarray, b: float) -> None:
            seconds = time.perf_counter() - start if config.timing == "wall" else 0.0
            objective = feature_objective(
                gamma, b, feature_map, data, config.lam, config.epsilon
            )
            if eval_data is not None:
                rows = (feature_map.map_point(x) for x in eval_data.examples)
                scores = np.array([float(np.dot(r, gamma)) + b for r in rows])
                if config.task == "classification":
                    predicted = np.where(scores >= 0.0, 1.0, -1.0)
                    err = float(np.mean(predicted != eval_data.labels))
                else:
                    err = float(
                        np.mean(
                            np.maximum(
                                np.abs(eval_data.labels - scores) - config.epsilon, 0.0
                            )
                        )
                    )
                err_text = repr(err)
            else:
                err_text = ""
            metrics_handle.write(f"{j},{seconds!r},{objective!r},{err_text}\n")

    try:
        gamma, b = asset_train(
            feature_map,
            data,
            params,
            region,
            checkpoint_every=checkpoint_every,
            on_checkpoint=on_checkpoint,
        )
    finally:
        if metrics_handle is not None:
            metrics_handle.close()

    if config.approx == "nystrom":
        payload: object = recover_alpha(feature_map, gamma)
    else:
        payload = feature_map
    model = Model(
        task=config.task,
        approx=config.approx,
        gamma=gamma,
        b=b,
        lam=config.lam,
        sigma=config.sigma,
        input_dim=data.n,
        payload=payload,
    )
    save_model(model, config.model)
    return EXIT_OK


def cmd_predict(config: RunConfig) -> int:
    model = load_model(config.model)
    data = load_libsvm(config.data, "regression", n_override=model.input_dim)
    lines = []
    for x in data.examples:
        value = decide(model, x)
        if model.task == "classification":
            lines.append(f"{predict_label(model, x):+d} {value!r}\n")
        else:
            lines.append(f"{value!r}\n")
    text = "".join(lines)
    if config.out is None:
        sys.stdout.write(text)
    else:
        with open(config.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    return EXIT_OK


def _read_predictions(path: str) -> list[float]:
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                values.append(float(tokens[0]))
            except ValueError:
                raise DataFormatError(
                    f"predictions line {lineno}: non-numeric value {tokens[0]!r}"
                ) from None
    return values


def cmd_eval(config: RunConfig) -> int:
    if (config.model is None) == (config.pred is None):
        raise UsageError("eval needs exactly one of --model or --pred")
    if config.pred is not None and config.task is None:
        raise UsageError("--task is required with --pred")
    if config.epsilon < 0.0:
        raise UsageError("--epsilon must be nonnegative")

    if config.model is not None:
        model = load_model(config.model)
        task = model.task
        data = load_libsvm(config.data, task, n_override=model.input_dim)
        if data.m < 1:
            raise DataFormatError("evaluation file contains no examples")
        error = _eval_error(model, data, config.epsilon)
    else:
        task = config.task
        data = load_libsvm(config.data, task)
        predictions = _read_predictions(config.pred)
        if len(predictions) != data.m:
            raise DataFormatError(
                f"{len(predictions)} predictions for {data.m} labeled examples"
            )
        if data.m < 1:
            raise DataFormatError("evaluation file contains no examples")
        if task == "classification":
            wrong = sum(
                1
                for value, y in zip(predictions, data.labels)
                if (1 if value >= 0 else -1) != int(y)
            )
            error = wrong / data.m
        else:
            error = float(
                np.mean(
                    [
                        max(abs(float(y) - v) - config.epsilon, 0.0)
                        for v, y in zip(predictions, data.labels)
                    ]
                )
            )
    print(repr(float(error)))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    config = _config_from_args(args)
    try:
        if config.command == "train":
            return cmd_train(config)
        if config.command == "predict":
            return cmd_predict(config)
        return cmd_eval(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, ModelFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, DegenerateKernelError, TrivialRegressionError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def console_main() -> None:
    sys.exit(main())
