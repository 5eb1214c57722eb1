# Copyright (c) 2024 ddtelegraph developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You may obtain a copy of the License at
#     https:#www.gnu.org/licenses/gpl-3.0.txt

"""Command line front end ``ddtelegraph``."""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, NoReturn

import numpy as np

from . import engine, expansion, montecarlo, optimizer
from .errors import (
    DomainError,
    NumericalError,
    OptimizationError,
    ResourceError,
    SamplingError,
    ValidationError,
)
from .noise import NoiseModel, mean_level
from .pulses import PulseSequence, echo_residual, parse_sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

#: float : Coefficients closer than this share a rank in ``compare``.
RANK_TOL = 1e-14

CSV_HEADER = "t,re_x,im_x,abs_x"


@dataclass
class RunConfig:
    """
    Inputs of one command gathered from the configuration file and the flags.

    Every subcommand builds one with :meth:`from_args`; fields a command does
    not take keep their defaults.
    """

    #: NoiseModel | None : The noise model, if the command takes ``--config``.
    model: NoiseModel | None = None
    #: list[PulseSequence] : Parsed sequences.
    sequences: list[PulseSequence] = field(default_factory=list)
    #: float : Largest time of the grid.
    t_max: float = 1.0
    #: int : Number of grid points.
    points: int = 101
    #: bool : Logarithmic instead of linear grid.
    log: bool = False
    #: str : ``"exact"`` or ``"ode"``.
    method: str = "exact"
    #: bool : Reuse eigendecompositions along the grid.
    eig_cache: bool = False
    #: float | None : Evaluation time of ``compare`` and ``mc``.
    t: float | None = None
    #: int | None : Pulse count of ``optimize``.
    pulses: int | None = None
    #: int : Multi-start count of ``optimize``.
    starts: int = 50
    #: int : Trajectory count of ``mc``.
    trajectories: int = 100_000
    #: int | None : Random seed.
    seed: int | None = None
    #: int : Worker threads.
    workers: int = 1
    #: str : Output path, ``-`` for standard output.
    out: str = "-"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """
        Return the configuration of parsed command line arguments.

        ``--config`` is loaded with :func:`load_model` and ``--sequence`` or
        ``--sequences`` parsed with :func:`~ddtelegraph.pulses.parse_sequence`.
        """
        values = vars(args)
        model = load_model(values["config"]) if values.get("config") else None
        if values.get("sequences") is not None:
            specs = split_specs(values["sequences"])
        elif values.get("sequence") is not None:
            specs = [values["sequence"]]
        else:
            specs = []
        options = {
            f.name: values[f.name]
            for f in fields(cls)
            if f.name in values and f.name not in ("model", "sequences")
        }
        return cls(model=model, sequences=[parse_sequence(s) for s in specs], **options)

    def grid(self) -> np.ndarray:
        """Return the time grid."""
        if self.points < 1 or not self.t_max > 0:
            msg = f"time grid needs points >= 1 and t_max > 0, got {self.points}, {self.t_max!r} !"
            raise DomainError(msg)
        if self.log:
            return np.geomspace(self.t_max * 1e-3, self.t_max, self.points)
        return np.linspace(0.0, self.t_max, self.points)


def load_model(path: str | Path) -> NoiseModel:
    """
    Read a noise model from a JSON document.

    Raises
    ------
    ValidationError
        With ``invariant="configuration"`` for unreadable or malformed
        documents, otherwise naming the violated model invariant.

    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        msg = f"cannot read configuration '{path}': {e}"
        raise ValidationError(msg, invariant="configuration") from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"malformed configuration '{path}' at line {e.lineno}, column {e.colno}: {e.msg}"
        raise ValidationError(msg, invariant="configuration") from e
    if not isinstance(document, dict):
        msg = f"configuration '{path}' must be a JSON object !"
        raise ValidationError(msg, invariant="configuration")
    return NoiseModel.from_dict(document)


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dumps(report: Any) -> str:
    return json.dumps(report, indent=2) + "\n"


def format_curve(samples: Sequence[engine.DecoherenceSample]) -> str:
    """Return the CSV document of a decoherence curve, full double precision."""
    rows = [CSV_HEADER]
    rows.extend(
        f"{s.t:.17g},{s.value.real:.17g},{s.value.imag:.17g},{abs(s.value):.17g}" for s in samples
    )
    return "\n".join(rows) + "\n"


def rank_sequences(
    model: NoiseModel, sequences: Sequence[PulseSequence], t: float | None = None
) -> list[dict[str, Any]]:
    """
    Compare sequences by their third-order coefficient.

    Echo-satisfying sequences are ranked by ``g_total`` among sequences with
    the same pulse count, rank 1 being the smallest; equal coefficients
    (within :data:`RANK_TOL`) share a rank. Sequences violating the echo
    condition are not ranked, nor is anything when the third-order scalar
    of the model vanishes.
    """
    s = expansion.third_order_scalar(model)
    entries = []
    for seq in sequences:
        residual = echo_residual(seq)
        g = expansion.g3(seq)
        entry: dict[str, Any] = {
            "sequence": seq.label,
            "pulse_count": seq.n_pulses,
            "echo_residual": residual,
            "g_total": g,
            "scalar_s": s,
            "predicted_cubic": g * s,
            "rank": None,
        }
        if t is not None:
            value = engine.coherence(model, seq, t).value
            entry["t"] = t
            entry["re_x"] = value.real
            entry["im_x"] = value.imag
        entries.append(entry)

    if s == 0:
        logger.warning("third order scalar vanishes, sequences are not ranked")
        return entries
    echo = [e for e in entries if abs(e["echo_residual"]) <= expansion.ECHO_TOL]
    for e in echo:
        peers = [p["g_total"] for p in echo if p["pulse_count"] == e["pulse_count"]]
        e["rank"] = 1 + sum(g < e["g_total"] - RANK_TOL for g in peers)
    return entries


def _cmd_validate(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    model = config.model
    report = {
        "valid": True,
        "n_levels": model.n_levels,
        "initial": model.initial_distribution.tolist(),
        "mean_level": mean_level(model),
        "scalar_s": expansion.third_order_scalar(model),
        "absorbing": np.flatnonzero(model.is_absorbing()).tolist(),
    }
    _emit(_dumps(report), config.out)
    return EXIT_OK


def _cmd_curve(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    seq = config.sequences[0]
    grid = config.grid()
    if config.method == "ode":
        samples = [engine.coherence_ode(config.model, seq, t) for t in grid]
    else:
        samples = engine.curve(
            config.model, seq, grid, use_cache=config.eig_cache, workers=config.workers
        )
    _emit(format_curve(samples), config.out)
    return EXIT_OK


def split_specs(text: str) -> list[str]:
    """
    Split a comma separated list of sequence specs.

    Bare numbers continue the preceding ``pos:`` spec, so
    ``"cpmg:2,pos:0.3,0.7,udd:2"`` yields three specs.
    """
    specs: list[str] = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        if specs and specs[-1].lower().startswith("pos:") and ":" not in token:
            try:
                float(token)
            except ValueError:
                pass
            else:
                specs[-1] += f",{token}"
                continue
        specs.append(token)
    return specs


def _cmd_compare(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    if not config.sequences:
        msg = "compare needs at least one sequence !"
        raise ValidationError(msg, invariant="sequence spec")
    _emit(_dumps(rank_sequences(config.model, config.sequences, config.t)), config.out)
    return EXIT_OK


def _cmd_expand(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    report = expansion.expansion_report(config.model, config.sequences[0])
    _emit(_dumps(report.to_dict()), config.out)
    return EXIT_OK


def _cmd_optimize(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    result = optimizer.minimize(config.pulses, config.starts, config.seed, workers=config.workers)
    _emit(_dumps(result.to_dict()), config.out)
    return EXIT_OK


def _cmd_mc(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    estimate = montecarlo.mc_coherence(
        config.model,
        config.sequences[0],
        config.t,
        config.trajectories,
        config.seed,
        workers=config.workers,
    )
    _emit(_dumps(estimate.to_dict()), config.out)
    return EXIT_OK


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser exiting with :data:`EXIT_INVALID` on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error [usage]: {message}\n")


def build_parser() -> ArgumentParser:
    """Return the argument parser with one subcommand per operation."""
    parser = ArgumentParser(
        prog="ddtelegraph",
        description="Dynamical decoupling of a qubit in telegraph-like noise.",
    )
    common = ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log at info level")
    common.add_argument("--out", default="-", help="output path, '-' for standard output")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("validate", parents=[common], help="check a noise model configuration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("curve", parents=[common], help="decoherence function on a time grid (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--sequence", required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--log", action="store_true", help="logarithmic grid from t_max/1000")
    p.add_argument("--method", choices=("exact", "ode"), default="exact")
    p.add_argument("--eig-cache", action="store_true", help="reuse eigendecompositions")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser(
        "compare", parents=[common], help="rank sequences by the third-order coefficient"
    )
    p.add_argument("--config", required=True)
    p.add_argument("--sequences", required=True, help="comma separated sequence specs")
    p.add_argument("--t", type=float, default=None, help="also report the decoherence at this time")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("expand", parents=[common], help="third-order expansion report")
    p.add_argument("--config", required=True)
    p.add_argument("--sequence", required=True)
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("optimize", parents=[common], help="minimize the third-order coefficient")
    p.add_argument("--pulses", type=int, required=True)
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser(
        "mc", parents=[common], help="Monte Carlo estimate of the decoherence function"
    )
    p.add_argument("--config", required=True)
    p.add_argument("--sequence", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--trajectories", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_mc)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand and return the exit code.

    ``0`` on success, ``1`` for invalid input (the message names the
    violated invariant) and ``2`` for numerical failures. Usage errors
    raise :class:`SystemExit` with code ``1``.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ValidationError as e:
        invariant = f" [{e.invariant}]" if e.invariant else ""
        sys.stderr.write(f"error{invariant}: {e}\n")
        return EXIT_INVALID
    except (DomainError, ResourceError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except (NumericalError, SamplingError, OptimizationError) as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return EXIT_NUMERICAL


def main(argv: Sequence[str] | None = None) -> NoReturn:
    """Console entry point."""
    sys.exit(run(argv))
