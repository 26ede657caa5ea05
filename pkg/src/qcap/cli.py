"""Batch command-line driver: load or generate problems, optimize, write reports.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .channels import (
    DEFAULT_MAX_DIM,
    Ensemble,
    KrausChannel,
    amplitude_damping_channel,
    depolarizing_channel,
    identity_channel,
    phase_damping_channel,
    random_channel,
    validate_channel,
)
from .errors import CompletenessViolation, DimensionMismatch, ParseError, QcapError
from .formats import parse_import, parse_matrix_literal, serialize_output
from .optimizer import OptimizerConfig, RunReport, multi_restart

BUILTIN_FAMILIES = ("identity", "depolarizing", "phase-damping", "amplitude-damping", "random")


@dataclass
class CliOptions:
    input_path: str | None = None
    output_path: str = "output.txt"
    channel: str | None = None
    num_states: int | None = None
    num_outcomes: int | None = None
    num_channels: int | None = None
    num_kraus: int | None = None
    dim_in: int | None = None
    dim_out: int | None = None
    sa_percent: float = 50.0
    tolerance: float = 1e-10
    seed: int | None = None
    restarts: int = 1
    fixed_ensemble_path: str | None = None
    quiet: bool = False
    no_limits: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad flags are input errors, not numerical ones
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qcap",
        description=(
            "Maximize the accessible information of quantum channels over input "
            "ensembles and POVMs, estimating the one-shot classical capacity."
        ),
    )
    parser.add_argument("--input", dest="input_path", help="import file with Kraus operators")
    parser.add_argument("--output", dest="output_path", default="output.txt",
                        help="output file (suffix _c<i> added when several channels run)")
    parser.add_argument("--channel", help=(
        "built-in channel family instead of --input: identity, depolarizing:P, "
        "phase-damping:P, amplitude-damping:P, random[:SEED]"
    ))
    parser.add_argument("--states", dest="num_states", type=int, help="number J of signal states")
    parser.add_argument("--outcomes", dest="num_outcomes", type=int,
                        help="initial number K of POVM outcomes")
    parser.add_argument("--channels", dest="num_channels", type=int,
                        help="number C of channels to process")
    parser.add_argument("--kraus", dest="num_kraus", type=int,
                        help="number M of Kraus operators per channel")
    parser.add_argument("--dim-in", dest="dim_in", type=int, help="dimension N of the states")
    parser.add_argument("--dim-out", dest="dim_out", type=int, help="dimension D of the outcomes")
    parser.add_argument("--dim", type=int, help="shorthand setting both --dim-in and --dim-out")
    parser.add_argument("--sa-percent", dest="sa_percent", type=float, default=50.0,
                        help="percentage chance of a steepest-ascent iteration (default 50)")
    parser.add_argument("--tolerance", type=float, default=1e-10,
                        help="relative stopping tolerance on the mutual information")
    parser.add_argument("--seed", type=int, help="random seed (default: fresh entropy, echoed)")
    parser.add_argument("--restarts", type=int, default=1,
                        help="independent restarts per channel; the best run is kept")
    parser.add_argument("--fixed-ensemble", dest="fixed_ensemble_path",
                        help="file with J state matrices; optimize the POVM only")
    parser.add_argument("--quiet", action="store_true", help="suppress the per-channel summary")
    parser.add_argument("--no-limits", dest="no_limits", action="store_true",
                        help="lift the default size ceiling of 30")
    return parser


def parse_args(argv=None) -> CliOptions:
    namespace = build_parser().parse_args(argv)
    options = CliOptions(
        input_path=namespace.input_path,
        output_path=namespace.output_path,
        channel=namespace.channel,
        num_states=namespace.num_states,
        num_outcomes=namespace.num_outcomes,
        num_channels=namespace.num_channels,
        num_kraus=namespace.num_kraus,
        dim_in=namespace.dim_in,
        dim_out=namespace.dim_out,
        sa_percent=namespace.sa_percent,
        tolerance=namespace.tolerance,
        seed=namespace.seed,
        restarts=namespace.restarts,
        fixed_ensemble_path=namespace.fixed_ensemble_path,
        quiet=namespace.quiet,
        no_limits=namespace.no_limits,
    )
    if namespace.dim is not None:
        options.dim_in = options.dim_in or namespace.dim
        options.dim_out = options.dim_out or namespace.dim
    return options


def _parse_channel_spec(spec: str) -> tuple[str, float | None]:
    name, param = spec, None
    if ":" in spec:
        name, raw = spec.split(":", 1)
    elif spec.endswith(")") and "(" in spec:
        name, raw = spec[:-1].split("(", 1)
    else:
        raw = None
    if raw is not None:
        try:
            param = float(raw)
        except ValueError:
            raise ValueError(f"cannot read channel parameter {raw!r}") from None
    name = name.strip().lower()
    if name not in BUILTIN_FAMILIES:
        raise ValueError(f"unknown channel family {name!r}; choose from {', '.join(BUILTIN_FAMILIES)}")
    return name, param


def _build_builtin_channels(options: CliOptions, seed: int, max_dim: int | None) -> list[KrausChannel]:
    name, param = _parse_channel_spec(options.channel)
    dim_in = options.dim_in or 2
    dim_out = options.dim_out or dim_in
    count = options.num_channels or 1
    if max_dim is not None and max(dim_in, dim_out) > max_dim:
        raise ValueError(f"dimension exceeds the ceiling of {max_dim} (use --no-limits to lift it)")

    def check_square(family):
        if dim_in != dim_out:
            raise ValueError(f"{family} channel needs equal input and output dimensions")

    def check_qubit(family):
        if dim_in != 2 or dim_out != 2:
            raise ValueError(f"{family} channel is defined for dimension 2 only")

    channels = []
    for index in range(count):
        if name == "identity":
            check_square("identity")
            channel = identity_channel(dim_in)
        elif name == "depolarizing":
            check_square("depolarizing")
            if param is None:
                raise ValueError("depolarizing channel needs a strength, e.g. depolarizing:0.5")
            channel = depolarizing_channel(param, dim_in)
        elif name == "phase-damping":
            check_qubit("phase-damping")
            if param is None:
                raise ValueError("phase-damping channel needs a strength, e.g. phase-damping:0.3")
            channel = phase_damping_channel(param)
        elif name == "amplitude-damping":
            check_qubit("amplitude-damping")
            if param is None:
                raise ValueError("amplitude-damping channel needs a strength")
            channel = amplitude_damping_channel(param)
        else:  # random
            num_kraus = options.num_kraus or 2
            channel_seed = int(param) if param is not None else seed
            rng = np.random.default_rng(channel_seed + index)
            channel = random_channel(num_kraus, dim_in, dim_out, rng)
        if options.num_kraus is not None and channel.num_operators != options.num_kraus:
            raise ValueError(
                f"--kraus {options.num_kraus} conflicts with the {name} family "
                f"(M = {channel.num_operators})"
            )
        channels.append(channel)
    return channels


def _load_fixed_ensemble(path: str, dim_in: int) -> Ensemble:
    """Read J state matrices, one literal per line, and refactor them."""
    with open(path, encoding="ascii") as handle:
        text = handle.read()
    matrices = []
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        matrices.append(parse_matrix_literal(raw.strip(), line=number))
    if not matrices:
        raise ValueError(f"no state matrices found in {path!r}")
    for m in matrices:
        if m.shape != (dim_in, dim_in):
            raise DimensionMismatch(
                f"fixed-ensemble state shape {m.shape} does not match dimension {dim_in}"
            )
    total = sum(float(np.trace(m).real) for m in matrices)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"fixed-ensemble traces sum to {total!r}, not 1")
    factors = []
    for m in matrices:
        factors.append(linalg.sqrt_psd(m))  # raises if a state is not PSD Hermitian
    scale = 1.0 / np.sqrt(sum(np.vdot(b, b).real for b in factors))
    return Ensemble(tuple(b * scale for b in factors))


@dataclass
class _Job:
    channels: list[KrausChannel]
    config: OptimizerConfig
    fixed_ensemble: Ensemble | None
    output_path: str
    seed: int
    quiet: bool


def _prepare(options: CliOptions) -> _Job:
    if options.input_path is None and options.channel is None:
        raise ValueError("either --input or --channel must be given")
    if options.input_path is not None and options.channel is not None:
        raise ValueError("--input and --channel are mutually exclusive")
    seed = options.seed if options.seed is not None else int(np.random.SeedSequence().entropy % 2**32)
    max_dim = None if options.no_limits else DEFAULT_MAX_DIM

    if options.input_path is not None:
        with open(options.input_path, encoding="ascii") as handle:
            imported = parse_import(handle.read())
        overrides = {
            "--channels": (options.num_channels, imported.num_channels),
            "--kraus": (options.num_kraus, imported.num_kraus),
            "--dim-in": (options.dim_in, imported.dim_in),
            "--dim-out": (options.dim_out, imported.dim_out),
        }
        for flag, (given, actual) in overrides.items():
            if given is not None and given != actual:
                raise ValueError(f"{flag} {given} conflicts with the import file value {actual}")
        channels = [validate_channel(ops, max_dim=max_dim) for ops in imported.channels]
        num_states = options.num_states or imported.num_states
        num_outcomes = options.num_outcomes or imported.num_outcomes
    else:
        channels = _build_builtin_channels(options, seed, max_dim)
        num_states = options.num_states or 2
        num_outcomes = options.num_outcomes or 2

    if max_dim is not None and max(num_states, num_outcomes) > max_dim:
        raise ValueError(f"J and K may not exceed {max_dim} (use --no-limits to lift the ceiling)")

    fixed_ensemble = None
    if options.fixed_ensemble_path is not None:
        fixed_ensemble = _load_fixed_ensemble(options.fixed_ensemble_path, channels[0].input_dim)
        num_states = fixed_ensemble.num_states

    config = OptimizerConfig(
        sa_percent=options.sa_percent,
        tolerance=options.tolerance,
        seed=seed,
        restarts=options.restarts,
        optimize_ensemble=fixed_ensemble is None,
        num_states=num_states,
        num_outcomes=num_outcomes,
    )
    return _Job(
        channels=channels,
        config=config,
        fixed_ensemble=fixed_ensemble,
        output_path=options.output_path,
        seed=seed,
        quiet=options.quiet,
    )


def _output_path(base: str, index: int, total: int) -> str:
    if total == 1:
        return base
    root, ext = os.path.splitext(base)
    return f"{root}_c{index}{ext}"


def _run_channel(job: _Job, index: int) -> RunReport:
    # Disjoint seed blocks keep the channels' restart streams independent.
    config = replace(job.config, seed=job.config.seed + index * job.config.restarts)
    initial = (job.fixed_ensemble, None) if job.fixed_ensemble is not None else None
    report = multi_restart(job.channels[index], config, initial)
    return replace(report, channel_count=len(job.channels))


def run(options: CliOptions) -> int:
    try:
        job = _prepare(options)
    except (ParseError, OSError, ValueError, DimensionMismatch, CompletenessViolation) as exc:
        print(f"qcap: error: {exc}", file=sys.stderr)
        return 1

    workers = 1
    env_workers = os.environ.get("QCAP_THREADS")
    if env_workers:
        try:
            workers = max(1, int(env_workers))
        except ValueError:
            print(f"qcap: error: QCAP_THREADS={env_workers!r} is not an integer", file=sys.stderr)
            return 1

    try:
        indices = range(len(job.channels))
        if workers > 1 and len(job.channels) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                reports = list(pool.map(lambda i: _run_channel(job, i), indices))
        else:
            reports = [_run_channel(job, i) for i in indices]
    except QcapError as exc:
        print(f"qcap: error: {exc}", file=sys.stderr)
        return 2

    try:
        for index, report in enumerate(reports):
            path = _output_path(job.output_path, index + 1, len(reports))
            with open(path, "w", encoding="ascii", newline="\n") as handle:
                handle.write(serialize_output(report))
    except OSError as exc:
        print(f"qcap: error: {exc}", file=sys.stderr)
        return 1

    if not job.quiet:
        print(f"seed = {job.seed}")
        for index, report in enumerate(reports, start=1):
            note = "" if report.converged else " (hit max iterations)"
            print(f"channel {index}: AI = {report.final_ai:.6f} (seed={report.config.seed}){note}")
    return 0


def main(argv=None) -> None:
    sys.exit(run(parse_args(argv)))


if __name__ == "__main__":
    main()
