"""Command-line front end: qes2x2 <command> --config <path> [--out <path>] [--format json|csv]"""
import argparse
import logging
import sys
from typing import List, Optional

from joblib import Parallel, delayed

from src.core.certifier import Certificate, algebraic_spectrum, certify
from src.core.config_handler import ConfigHandler, RunConfig, load_run_config
from src.core.errors import ConfigError, ModelError, QESError
from src.core.exactfield import format_scalar
from src.core.models import (CalogeroParams, GoldstoneParams, LameParams, SexticParams, build_calogero,
                             build_goldstone, build_lame, build_sextic, build_sextic_gauged,
                             catalog_entries, goldstone_space, lame_field_analysis, model_from_dict,
                             select_space)
from src.core.states import CertStatus, Command, ExitCode
from src.simulation.calogero_oracle import calogero_report
from src.simulation.numverify import GridSpec, match_spectra, solve_line, solve_periodic
from src.utils.helpers import float_digits, setup_logging, write_csv, write_json, write_text

logger = logging.getLogger(__name__)

DEFAULT_CALOGERO_READING = "quadratic"


class QESArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so main() owns the exit code"""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = QESArgumentParser(prog="qes2x2",
                               description="Exact certification of QES 2x2 matrix Schroedinger operators")
    parser.add_argument('command', choices=[c.value for c in Command], help='What to run')
    parser.add_argument('--config', help='JSON or YAML run config')
    parser.add_argument('--out', help='Output file (default: standard output)')
    parser.add_argument('--format', choices=['json', 'csv', 'text'], default=None,
                        help='Output format (default: csv for scan, text for catalog, json otherwise)')
    parser.add_argument('--verbose', action='store_true', help='Log progress')
    parser.add_argument('--debug', action='store_true', help='Log everything')
    return parser


# model dispatch

def certify_model(params, model_spec: Optional[dict] = None):
    """(result, operator, extra) for a params object; extra carries model-specific report fields"""
    model_spec = model_spec or {}
    extra = {}
    if isinstance(params, SexticParams):
        op = build_sextic_gauged(params)
        _, space = build_sextic(params)
    elif isinstance(params, LameParams):
        plan = lame_field_analysis(params)
        op, spaces = build_lame(params)
        extra = {"field_plan": plan.to_dict(), "decoupled": params.decoupled}
        space = select_space(spaces, params.space)
    elif isinstance(params, GoldstoneParams):
        op = build_goldstone(params.coupling)
        space = goldstone_space(params.coupling)
    elif isinstance(params, CalogeroParams):
        reading = model_spec.get("reading", DEFAULT_CALOGERO_READING)
        op, space = build_calogero(params, reading)
        extra = {"reading": reading}
    else:
        raise ModelError(f"No certifier for {type(params).__name__}")
    return certify(op, space), op, extra


def _model_dict(config: RunConfig) -> dict:
    out = config.params.to_dict()
    if isinstance(config.params, CalogeroParams):
        out["reading"] = config.model.get("reading", DEFAULT_CALOGERO_READING)
    return out


def _output_format(args, default: str) -> str:
    return args.format or default


def _write_report(report: dict, args, config: RunConfig):
    path = args.out or config.output.get("path")
    if _output_format(args, config.output.get("format", "json")) == "csv":
        write_csv([_flatten(report)], path)
    else:
        write_json(report, path)


def _flatten(report: dict) -> dict:
    return {key: value if not isinstance(value, (dict, list)) else str(value) for key, value in report.items()}


def _eigenvalue_text(value: complex) -> str:
    digits = float_digits()
    if value.imag == 0:
        return f"{value.real:.{digits}g}"
    return f"{value.real:.{digits}g}{value.imag:+.{digits}g}j"


# commands

def cmd_verify(config: RunConfig, args, with_spectrum: bool = False) -> ExitCode:
    result, _, extra = certify_model(config.params, config.model)
    report = {"model": _model_dict(config), **extra}
    if isinstance(result, Certificate):
        spectrum = algebraic_spectrum(result) if with_spectrum else None
        report.update(result.to_dict(spectrum))
        code = ExitCode.OK if result.recheck_passed else ExitCode.COUNTEREXAMPLE
    else:
        logger.error(f"Error: {result.locator}")
        report.update(result.to_dict())
        code = ExitCode.COUNTEREXAMPLE
    _write_report(report, args, config)
    return code


def cmd_spectrum(config: RunConfig, args) -> ExitCode:
    return cmd_verify(config, args, with_spectrum=True)


def _numeric_levels(config: RunConfig, op, count: int):
    params = config.params
    grid_L = config.numeric.get("L")
    if isinstance(params, SexticParams):
        grid = GridSpec(config.npoints(), "line", None if grid_L is None else float(grid_L))
        return solve_line(params, grid, min(count, 2 * grid.npoints))
    grid = GridSpec(config.npoints(), "periodic")
    return solve_periodic(op, grid, min(count, 2 * grid.npoints))


def _crosscheck_calogero(config: RunConfig, args) -> ExitCode:
    options = config.calogero
    report = calogero_report(config.params, samples=int(options["samples"]), fd_step=float(options["fd_step"]),
                             tol=float(options["tol"]), min_separation=float(options["min_separation"]),
                             seed=int(options["seed"]))
    path = args.out or config.output.get("path")
    if _output_format(args, "json") == "csv":
        rows = [{"reading": o.reading, "certified": o.certified, "succeeded": o.succeeded,
                 "max_residual": max((r.max_residual for r in o.residuals), default=None),
                 "locator": o.locator} for o in report.outcomes]
        write_csv(rows, path)
    else:
        write_json(report.to_dict(), path)
    if report.succeeded_readings:
        return ExitCode.OK
    if not any(o.certified for o in report.outcomes):
        return ExitCode.COUNTEREXAMPLE
    return ExitCode.UNCONFIRMED


def cmd_crosscheck(config: RunConfig, args) -> ExitCode:
    if isinstance(config.params, CalogeroParams):
        return _crosscheck_calogero(config, args)
    result, op, _ = certify_model(config.params, config.model)
    if not isinstance(result, Certificate):
        logger.error(f"Error: {result.locator}")
        _write_report({"model": _model_dict(config), **result.to_dict()}, args, config)
        return ExitCode.COUNTEREXAMPLE
    spectrum = algebraic_spectrum(result)
    count = max(int(config.numeric["count"]), result.dimension)
    numeric = _numeric_levels(config, op, count)
    rel_tol = float(config.numeric["rel_tol"])
    match = match_spectra(spectrum.values(), numeric, rel_tol, model=config.kind, space=result.space.name)

    path = args.out or config.output.get("path")
    if _output_format(args, config.output.get("format", "json")) == "csv":
        write_csv(match.records(), path)
    else:
        write_json({"model": _model_dict(config), "npoints": config.npoints(),
                    "certificate": result.to_dict(spectrum), "match": match.to_dict()}, path)
    if not match.all_confirmed:
        logger.warning(f"Warning: {len(match.unmatched)} algebraic eigenvalue(s) unconfirmed at tolerance {rel_tol}")
        return ExitCode.UNCONFIRMED
    return ExitCode.OK


def scan_point(model_spec: dict, axis: str, value, index: int) -> dict:
    """One scan row; failures are recorded, never raised"""
    spec = dict(model_spec)
    spec[axis] = value if axis == "m" else format_scalar(value)
    row = {"index": index, axis: spec[axis], "status": "", "dim": None, "eigenvalues": "", "message": ""}
    try:
        params = model_from_dict(spec)
        result, _, _ = certify_model(params, spec)
        if isinstance(result, Certificate):
            spectrum = algebraic_spectrum(result)
            row["dim"] = result.dimension
            row["eigenvalues"] = "; ".join(_eigenvalue_text(v) for v in spectrum.values())
            decoupled = isinstance(params, LameParams) and params.decoupled
            row["status"] = (CertStatus.DECOUPLED if decoupled else CertStatus.CERTIFIED).value
            if not spectrum.converged:
                row["message"] = "root finder did not converge"
        else:
            row["status"] = CertStatus.COUNTEREXAMPLE.value
            row["message"] = result.locator
    except QESError as e:
        row["status"] = CertStatus.FAILED.value
        row["message"] = str(e)
    return row


def cmd_scan(config: RunConfig, args) -> ExitCode:
    axis = config.scan["axis"]
    values = config.scan_values()
    logger.info(f"Scanning {axis} over {len(values)} points with n_jobs={config.scan['n_jobs']}")
    rows = Parallel(n_jobs=int(config.scan["n_jobs"]))(
        delayed(scan_point)(config.model, axis, value, index) for index, value in enumerate(values))
    for row in rows:
        if row["status"] == CertStatus.FAILED.value:
            logger.warning(f"Warning: scan point {axis}={row[axis]} failed: {row['message']}")
    path = args.out or config.output.get("path")
    if _output_format(args, config.output.get("format", "csv")) == "json":
        write_json(rows, path)
    else:
        write_csv(rows, path, columns=["index", axis, "status", "dim", "eigenvalues", "message"])
    return ExitCode.OK


def catalog_lines(m: Optional[int] = None) -> List[str]:
    lines = []
    for row in catalog_entries(m):
        line = (f"{row['name']}  case {row['case']}  prefactor {row['prefactor']}  mixer {row['mixer']}  "
                f"degrees {row['degrees']}  kappa^2 = {row['kappa_sq']}  "
                f"kappa*2*theta*k = {row['kappa_orientation']}  dim {row['dimension']}")
        if m is not None:
            at_m = row["dimension_at_m"]
            line += f"  dim(m={m}) = {at_m if at_m is not None else 'not applicable'}"
        lines.append(line)
    return lines


def cmd_catalog(config: RunConfig, args) -> ExitCode:
    m = config.model.get("m") if config.model else None
    if m is not None and (int(m) != m or m < 0):
        raise ConfigError(f"Catalog m must be a non-negative integer, got {m}")
    m = None if m is None else int(m)
    path = args.out or config.output.get("path")
    fmt = _output_format(args, config.output.get("format", "text"))
    if fmt == "json":
        write_json(catalog_entries(m), path)
    elif fmt == "csv":
        write_csv(catalog_entries(m), path)
    else:
        write_text(catalog_lines(m), path)
    return ExitCode.OK


COMMANDS = {
    Command.VERIFY: cmd_verify,
    Command.SPECTRUM: cmd_spectrum,
    Command.CROSSCHECK: cmd_crosscheck,
    Command.SCAN: cmd_scan,
    Command.CATALOG: cmd_catalog,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"Error: {e}", file=sys.stderr)
        return int(ExitCode.USAGE)
    setup_logging(args.verbose, args.debug)
    command = Command(args.command)
    try:
        config = load_run_config(args.config, command, ConfigHandler())
        return int(COMMANDS[command](config, args))
    except (ConfigError, ModelError) as e:
        logger.error(f"Error: {e}")
        return int(ExitCode.USAGE)
    except QESError as e:
        logger.error(f"Error: {type(e).__name__}: {e}")
        return int(ExitCode.USAGE)


if __name__ == "__main__":
    sys.exit(main())
