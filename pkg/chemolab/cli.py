"""
Command line interface.

    chemolab SUBCOMMAND [--config FILE] [--set KEY=VALUE ...] [--output-dir DIR]

Subcommands: steady, evolve, verify, constants, sweep-gamma, oracle.
Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 numerical failure. Every failure prints a JSON error document on
stderr and, once the output directory is known, writes it to error.json.


Copyright (c) 2026 The chemolab authors

This file is part of chemolab.

chemolab is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

chemolab is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with chemolab.  If not, see <https://www.gnu.org/licenses/>.
"""
from __future__ import annotations

import argparse
import functools
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

from chemolab import __version__
from chemolab.analysis import (
    InequalityCheck, VerificationReport, check_convergence_theorem, check_steady_bounds,
    check_trajectory_bounds, render_summary
)
from chemolab.config import RunConfig, load_config, validate
from chemolab.enum import DomainKind, ExitCode, Subcommand
from chemolab.evolve import TrajectoryRecord, TrajectorySample, simulate, uniform_bound_constants
from chemolab.exceptions import (
    AssemblyError, ChemolabError, ConfigurationError, DomainError, PreconditionError,
    VerificationFailure
)
from chemolab.mesh import Grid, ScalarField, estimate_trace_constant
from chemolab.oracle import compare_with_fields, shoot_coupled_steady_1d
from chemolab.params import ModelParams
from chemolab.persistence import OracleStore
from chemolab.publisher import Publisher
from chemolab.serialization import (
    dumps_document, write_document, write_field_csv, write_trajectory_csv
)
from chemolab.steady import (
    SteadyStatePair, compute_gamma_star, fixed_point_steady, uniqueness_sweep
)
from chemolab.workers import run_jobs

logger = logging.getLogger(__name__)

ORACLE_AGREEMENT_TOL = 1e-4
ORACLE_PROFILE_NAME = "coupled_steady"

USAGE_ERRORS = (ConfigurationError, DomainError, AssemblyError, PreconditionError)

LOG_FORMAT = "%(asctime)s %(levelname)s [%(category)s:%(event)s] %(name)s: %(message)s"


class _CategoryDefaults(logging.Filter):
    """Supplies the category/event tags for records logged without them."""

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "category"):
            record.category = "-"
        if not hasattr(record, "event"):
            record.event = "-"
        return True


def configure_logging(verbosity: int = 0):
    """Sends chemolab log records to stderr; -v for info, -vv for debug."""
    package_logger = logging.getLogger("chemolab")
    for handler in list(package_logger.handlers):
        if getattr(handler, "chemolab_cli", False):
            package_logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.chemolab_cli = True
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.addFilter(_CategoryDefaults())
    package_logger.addHandler(handler)
    package_logger.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``chemolab`` command."""
    parser = argparse.ArgumentParser(
        prog="chemolab",
        description="Numerical verification lab for a chemotaxis-consumption model "
                    "with logistic growth and Robin signal boundary conditions."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "subcommand", choices=[subcommand.value for subcommand in Subcommand],
        help="what to run"
    )
    parser.add_argument(
        "-c", "--config", help="run configuration file (built-in defaults when omitted)"
    )
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one configuration entry; may be repeated"
    )
    parser.add_argument("-o", "--output-dir", help="overrides output_dir of the configuration")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)"
    )
    return parser


def _parse_overrides(pairs: Sequence[str]) -> Dict[str, str]:
    overrides = {}
    for pair in pairs:
        key, separator, value = pair.partition("=")
        if not separator or not key.strip():
            raise ConfigurationError(
                f"Override is not a KEY=VALUE pair: {pair!r}", additional_context={"set": pair}
            )
        overrides[key.strip()] = value.strip()
    return overrides


def _load(args: argparse.Namespace) -> RunConfig:
    overrides = _parse_overrides(args.overrides)
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.config:
        return validate(load_config(args.config, overrides))
    return validate(RunConfig.from_mapping(overrides))


def _context_summary(context) -> object:
    if isinstance(context, dict):
        return {str(key): _context_summary(value) for key, value in context.items()}
    if isinstance(context, TrajectoryRecord):
        return {
            "samples": len(context.samples),
            "last_sample": dict(zip(
                ("t", "l1_u", "linf_u", "min_u"),
                (context.samples[-1].t, context.samples[-1].l1_u,
                 context.samples[-1].linf_u, context.samples[-1].min_u)
            )) if context.samples else None,
            "accepted_steps": context.accepted_steps,
            "rejected_steps": context.rejected_steps,
        }
    if isinstance(context, ScalarField):
        return {"min": context.min(), "max": context.max()}
    if isinstance(context, (list, tuple)) and len(context) > 50:
        return {"length": len(context), "tail": list(context[-10:])}
    return context


def _error_document(error: BaseException) -> dict:
    context = getattr(error, "additional_context", None)
    if isinstance(error, OSError) and context is None:
        context = {"filename": error.filename, "errno": error.errno}
    return {
        "error": type(error).__name__,
        "message": getattr(error, "message", str(error)),
        "context": _context_summary(context),
    }


def _exit_code_of(error: BaseException) -> ExitCode:
    if isinstance(error, VerificationFailure):
        return ExitCode.VERIFICATION_FAILED
    if isinstance(error, USAGE_ERRORS + (OSError,)):
        return ExitCode.USAGE_ERROR
    return ExitCode.NUMERICAL_FAILURE


class _Run:
    """One subcommand execution with its outputs."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.params: ModelParams = config.to_params()
        self.grid: Grid = config.grid()
        self.output_dir = config.output_dir

    def path(self, filename: str) -> str:
        """Path of an output file."""
        return os.path.join(self.output_dir, filename)

    def steady_state(self) -> SteadyStatePair:
        """Steady state of the configured parameters, written as field CSVs."""
        pair = fixed_point_steady(self.params, self.grid)
        for name in ("U", "V", "W"):
            write_field_csv(self.path(f"steady_{name}.csv"), getattr(pair, name))
        return pair

    def oracle_report(self, pair: SteadyStatePair) -> VerificationReport:
        """Agreement of a grid steady state with the shooting oracle."""
        report = VerificationReport(title="oracle agreement")
        if self.grid.kind is not DomainKind.INTERVAL:
            report.notes.append("no oracle on rectangles; comparison skipped")
            return report
        profile = shoot_coupled_steady_1d(self.params, self.config.oracle_tol)
        errors = compare_with_fields(profile, {"U": pair.U, "V": pair.V, "W": pair.W})
        for name, error in errors.items():
            report.checks.append(InequalityCheck.of(
                f"relative ||{name} - {name}_oracle||_inf", error, ORACLE_AGREEMENT_TOL
            ))
        return report

    def simulate(self, pair: SteadyStatePair, enforce_monitors: bool) -> TrajectoryRecord:
        """Evolution from the configured u0 with the steady state as reference."""
        publisher = Publisher()
        publisher.register(_log_sample)
        record = simulate(
            self.config.initial_density(self.grid), self.params, self.config.t_end,
            self.config.dt, self.grid, sample_every=self.config.sample_every,
            steady_ref=pair, snapshot_times=self.config.snapshot_times,
            publisher=publisher, monitor_alpha=self.config.monitor_alpha,
            enforce_monitors=enforce_monitors,
        )
        write_trajectory_csv(self.path("trajectory.csv"), record.rows())
        for t, (u, v) in sorted(record.snapshots.items()):
            write_field_csv(self.path(f"snapshot_t{t:.6g}_u.csv"), u)
            write_field_csv(self.path(f"snapshot_t{t:.6g}_v.csv"), v)
        return record

    def finish(self, name: str, report: VerificationReport) -> ExitCode:
        """Writes a verification report and its summary; the exit code follows the verdict."""
        write_document(self.path(f"{name}_report.json"), report.to_dict())
        with open(self.path(f"{name}_summary.txt"), "w", encoding="utf-8") as file:
            file.write(render_summary(report))
        return ExitCode.SUCCESS if report.passed else ExitCode.VERIFICATION_FAILED


def _log_sample(sample: TrajectorySample):
    logger.debug(
        "t=%.6g ||u||_1=%.9g min u=%.6g", sample.t, sample.l1_u, sample.min_u,
        extra={"category": "CLI", "event": "SAMPLE"}
    )


def _run_steady(run: _Run) -> ExitCode:
    pair = run.steady_state()
    report = check_steady_bounds(pair, run.params)
    if run.config.oracle_compare:
        report.extend(run.oracle_report(pair))
    return run.finish("steady", report)


def _run_evolve(run: _Run) -> ExitCode:
    pair = run.steady_state()
    record = run.simulate(pair, enforce_monitors=True)
    write_document(run.path("evolve_report.json"), {
        "samples": len(record.samples),
        "accepted_steps": record.accepted_steps,
        "rejected_steps": record.rejected_steps,
        "l1_bound": record.l1_bound,
        "sub_solution_tolerance": record.sub_solution_tolerance,
        "steady": pair.to_dict(),
    })
    return ExitCode.SUCCESS


def _run_verify(run: _Run) -> ExitCode:
    pair = run.steady_state()
    constants = uniform_bound_constants(
        run.params, run.grid, run.config.initial_density(run.grid)
    )
    record = run.simulate(pair, enforce_monitors=False)

    report = VerificationReport(title="verify")
    report.extend(check_steady_bounds(pair, run.params))
    report.extend(check_trajectory_bounds(record, run.params, constants))
    report.extend(check_convergence_theorem(record, pair, run.params, constants))
    if run.config.oracle_compare:
        report.extend(run.oracle_report(pair))
    report.values["constants"] = constants.to_dict()
    report.values["steady"] = pair.to_dict()
    write_document(run.path("constants.json"), constants.to_dict())
    return run.finish("verify", report)


def _run_constants(run: _Run) -> ExitCode:
    constants = uniform_bound_constants(
        run.params, run.grid, run.config.initial_density(run.grid)
    )
    write_document(run.path("constants.json"), constants.to_dict())
    for flag in constants.flags():
        logger.warning("%s", flag, extra={"category": "CLI", "event": "CONSTANTS"})
    return ExitCode.SUCCESS


def _sweep_one(params: ModelParams, grid: Grid, n_inits: int, seed: int,
               trace_constant: float) -> dict:
    return uniqueness_sweep(
        params, grid, n_inits, seed, trace_constant=trace_constant, max_workers=1
    ).to_dict()


def _run_sweep_gamma(run: _Run) -> ExitCode:
    trace_constant = estimate_trace_constant(run.grid)
    threshold = compute_gamma_star(
        run.params.lambda_, run.params.mu, run.params.g_sup, trace_constant
    )
    gammas = list(run.config.gamma_grid)
    jobs: List[Callable[[], dict]] = [
        functools.partial(
            _sweep_one, run.params.with_gamma(gamma), run.grid, run.config.n_inits,
            run.config.seed, trace_constant
        )
        for gamma in gammas
    ]
    entries = []
    for gamma, outcome in zip(gammas, run_jobs(jobs)):
        entry = {
            "gamma": gamma,
            "F1": float(threshold.F1(gamma)),
            "F2": float(threshold.F2(gamma)),
        }
        if isinstance(outcome, BaseException):
            entry["error"] = _error_document(outcome)
        else:
            entry["sweep"] = outcome
        entries.append(entry)
    write_document(run.path("sweep_gamma.json"), {
        "trace_constant": trace_constant,
        "gamma_star": threshold.gamma_star,
        "n_inits": run.config.n_inits,
        "seed": run.config.seed,
        "entries": entries,
    })
    return ExitCode.SUCCESS


def _run_oracle(run: _Run) -> ExitCode:
    if run.grid.kind is not DomainKind.INTERVAL:
        raise ConfigurationError("The oracle subcommand needs domain = interval.")
    profile = shoot_coupled_steady_1d(run.params, run.config.oracle_tol, x=run.grid.axes[0])
    store = OracleStore(run.output_dir)
    store.save(ORACLE_PROFILE_NAME, profile)

    pair = SteadyStatePair(
        U=ScalarField(run.grid, profile.U), V=ScalarField(run.grid, profile.V),
        W=ScalarField(run.grid, profile.W), iterations=0, final_update=0.0
    )
    report = check_steady_bounds(pair, run.params)
    report.title = "oracle bounds"
    if run.config.oracle_compare:
        report.extend(run.oracle_report(fixed_point_steady(run.params, run.grid)))
    return run.finish("oracle", report)


HANDLERS: Dict[Subcommand, Callable[[_Run], ExitCode]] = {
    Subcommand.STEADY: _run_steady,
    Subcommand.EVOLVE: _run_evolve,
    Subcommand.VERIFY: _run_verify,
    Subcommand.CONSTANTS: _run_constants,
    Subcommand.SWEEP_GAMMA: _run_sweep_gamma,
    Subcommand.ORACLE: _run_oracle,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one subcommand.

    :return: the process exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(ExitCode.SUCCESS if error.code in (0, None) else ExitCode.USAGE_ERROR)
    configure_logging(args.verbose)

    output_dir = None
    try:
        config = _load(args)
        output_dir = config.output_dir
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, "config.cfg"), "w", encoding="utf-8") as file:
            file.write(config.render())
        subcommand = Subcommand(args.subcommand)
        logger.info(
            "Running %s into %s", subcommand.value, output_dir,
            extra={"category": "CLI", "event": "START"}
        )
        code = HANDLERS[subcommand](_Run(config))
    except (ChemolabError, OSError) as error:
        code = _report_failure(args.subcommand, error, output_dir)
    except Exception as error:  # pylint: disable=broad-except
        logger.exception(
            "Unexpected error running %s", args.subcommand,
            extra={"category": "CLI", "event": "UNEXPECTED"}
        )
        code = _report_failure(args.subcommand, error, output_dir)
    return int(code)


def _report_failure(subcommand: str, error: BaseException, output_dir: Optional[str]) -> ExitCode:
    """Writes the error document to stderr, and to error.json when the output directory exists."""
    code = _exit_code_of(error)
    document = _error_document(error)
    sys.stderr.write(dumps_document(document))
    if output_dir is not None and os.path.isdir(output_dir):
        try:
            write_document(os.path.join(output_dir, "error.json"), document)
        except OSError as write_error:
            logger.warning(
                "Could not write the error document: %s", write_error,
                extra={"category": "CLI", "event": "FAILED"}
            )
    logger.error(
        "%s failed with exit code %d: %s", subcommand, code, document["message"],
        extra={"category": "CLI", "event": "FAILED"}
    )
    return code


def main():
    """Console entry point."""
    sys.exit(run_cli())
