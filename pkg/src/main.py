"""
Command-line front end: bound tables, FEM verification, M(K) constants and the
worked-example reproduction table.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
from dotenv import load_dotenv

from src.services import report_service
from src.services.bounds import (
    best_bound,
    estimate_bounds,
    lower_bound_thm47,
    payne_weinberger,
    quasidisc_MK,
)
from src.services.dilatation import matrix_field_from_spec
from src.services.fem import solve_domain
from src.services.qcmaps import beltrami_residual, make_ellipse_map, make_map
from src.utils.errors import (
    EXIT_BOUND_VIOLATION,
    EXIT_OK,
    ConfigError,
    InvalidResolution,
    QCSpectralError,
    SolverNoConvergence,
)
from src.utils.workers import ordered_map

logger = logging.getLogger(__name__)

COMMANDS = ("estimate", "verify", "constants", "reproduce-examples")
COMMAND_ALIASES = {"bounds": "estimate"}
FORMATS = ("csv", "json")
EXAMPLE_MAPS = ("ellipse:a=2,b=1", "rose_petal", "cusp")
THIN_ELLIPSE_SUM = 3.0
THIN_ELLIPSE_GAPS = (1.0, 0.1, 0.01)
BOUND_TOLERANCE = 0.02
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one CLI run."""
    command: str
    map_id: str = "ellipse:a=2,b=1"
    betas: tuple = (2.0,)
    n_radial: int = 32
    n_angular: int = 128
    k_list: tuple = (1.0, 1.5, 2.0, 4.0)
    out: Optional[str] = None
    format: str = "csv"
    seed: int = 0
    m_eigs: int = 6
    n_quad: int = 64
    matrix: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "k_list", tuple(float(K) for K in self.k_list))
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.n_radial < 4 or self.n_angular < 16:
            raise InvalidResolution(
                f"resolution ({self.n_radial}, {self.n_angular}) below the minimum (4, 16)")
        if self.m_eigs < 2:
            raise ConfigError(f"--m-eigs must be >= 2, got {self.m_eigs}")
        if self.n_quad < 16:
            raise ConfigError(f"n_quad must be >= 16, got {self.n_quad}")
        if not self.betas or any(beta <= 1.0 for beta in self.betas):
            raise ConfigError(f"every beta must be > 1, got {self.betas}")
        if not self.k_list or any(K < 1.0 for K in self.k_list):
            raise ConfigError(f"every K must be >= 1, got {self.k_list}")

    def to_dict(self):
        data = asdict(self)
        data["betas"] = list(self.betas)
        data["k_list"] = list(self.k_list)
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Rebuild a config from to_dict output.

        Raises:
            ConfigError: On unknown or missing keys
        """
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"incomplete config: {e}") from e


class _Parser(argparse.ArgumentParser):
    """Argument errors become ConfigError so they exit with the config-error code."""

    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--map", dest="map_id", default="ellipse:a=2,b=1",
                        help='map id, e.g. "ellipse:a=2,b=1", "rose_petal", "cusp", "shear:fprime=const1,a=1"')
    common.add_argument("--beta", default="2", help="comma-separated beta values (> 1)")
    common.add_argument("--nr", type=int, default=32, help="radial mesh resolution")
    common.add_argument("--na", type=int, default=128, help="angular mesh resolution")
    common.add_argument("--k-list", default="1,1.5,2,4", help="comma-separated K values (>= 1)")
    common.add_argument("--out", default=None, help="output file (relative to QCS_OUTPUT_DIR)")
    common.add_argument("--format", default="csv", choices=FORMATS)
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--m-eigs", type=int, default=6, help="number of eigenvalues to compute")
    common.add_argument("--n-quad", type=int, default=64, help="radial quadrature nodes")
    common.add_argument("--matrix", default=None,
                        help='verify only: JSON matrix field, inline or a .json path, e.g. '
                             '{"kind": "constant", "a11": 1, "a12": 0, "a22": 1}')
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="qcspectral",
                     description="Neumann eigenvalue bounds through quasiconformal maps onto the disc")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("estimate", aliases=["bounds"], parents=[common],
                          help="evaluate every lower bound for a map")
    subparsers.add_parser("verify", parents=[common], help="FEM eigenvalue against the bounds")
    subparsers.add_parser("constants", parents=[common], help="quasidisc constant M(K)")
    subparsers.add_parser("reproduce-examples", parents=[common],
                          help="worked examples and the thin-ellipse sweep")
    return parser


def _float_list(text, flag):
    try:
        return tuple(float(item) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from e


def config_from_args(args):
    return RunConfig(
        command=COMMAND_ALIASES.get(args.command, args.command),
        map_id=args.map_id,
        betas=_float_list(args.beta, "--beta"),
        n_radial=args.nr,
        n_angular=args.na,
        k_list=_float_list(args.k_list, "--k-list"),
        out=args.out,
        format=args.format,
        seed=args.seed,
        m_eigs=args.m_eigs,
        n_quad=args.n_quad,
        matrix=args.matrix,
    )


def configure_logging(verbosity=0):
    """Level from QCS_LOG_LEVEL (default WARNING), lowered by each -v."""
    name = os.getenv("QCS_LOG_LEVEL", "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError(f"QCS_LOG_LEVEL {name!r} is not a logging level")
    level = max(logging.DEBUG, level - 10 * verbosity)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def cmd_estimate(config):
    """Every bound for config.map_id and the best applicable one."""
    qc_map = make_map(config.map_id)
    bounds = estimate_bounds(qc_map, config.betas, config.n_quad)
    return bounds, best_bound(bounds)


def load_matrix_field(text):
    """
    MatrixField from a --matrix value: inline JSON or the path of a JSON file.

    Raises:
        ConfigError: If the file cannot be read or the JSON is not an object
    """
    if text.lstrip().startswith("{"):
        raw = text
    else:
        try:
            with open(text, "r", encoding="utf-8") as f:
                raw = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read matrix file {text!r}: {e}") from e
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"--matrix is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"--matrix must be a JSON object, got {type(data).__name__}")
    return matrix_field_from_spec(data)


def cmd_verify(config):
    """
    FEM eigenvalues for the map's domain and matrix field, with every bound attached
    and sampled map checks recorded.

    With config.matrix the given field replaces the map's own; the bounds belong to
    the map's field, so none are attached.
    """
    qc_map = make_map(config.map_id)
    A = qc_map.matrix_field if config.matrix is None else load_matrix_field(config.matrix)
    report = solve_domain(qc_map.domain, A, config.n_radial, config.n_angular, config.m_eigs)
    mu = report.mu_sequence
    if abs(mu[0]) > 1e-8 * mu[1]:
        raise SolverNoConvergence(f"constant mode not resolved: mu_0 = {mu[0]:.3e}, mu_1 = {mu[1]:.6g}")

    report.map_id = qc_map.map_id
    if config.matrix is None:
        report.bounds = estimate_bounds(qc_map, config.betas, config.n_quad)
    else:
        logger.info(f"Custom matrix field on {qc_map.domain.name}; no bounds attached")
    rng = np.random.default_rng(config.seed)
    samples = qc_map.sample_interior(1000, rng)
    boundary = qc_map.domain.boundary_points(1000)
    report.checks = {
        "beltrami_residual": beltrami_residual(qc_map, samples),
        "boundary_residual": float(np.max(np.abs(np.abs(qc_map.phi(boundary)) - 1.0))),
        "violations": [bound.kind.value for bound in report.violations(BOUND_TOLERANCE)],
    }
    return report


def cmd_constants(config):
    """M(K) for every K, computed concurrently and returned in input order."""
    return ordered_map(quasidisc_MK, config.k_list)


def _example_row(map_id, config):
    qc_map = make_map(map_id)
    thm47 = lower_bound_thm47(qc_map)
    classical = payne_weinberger(qc_map.domain, qc_map.ellipticity_K)
    fem = solve_domain(qc_map.domain, qc_map.matrix_field, config.n_radial, config.n_angular,
                       config.m_eigs)
    return {
        "map": qc_map.map_id,
        "thm47": thm47.value,
        "classical": classical.value,
        "classical_kind": classical.kind.value,
        "classical_applicable": classical.applicable,
        "mu1_fem": fem.mu1_fem,
    }


def thin_ellipse_sweep(total=THIN_ELLIPSE_SUM, gaps=THIN_ELLIPSE_GAPS):
    """
    Ellipse bounds with a+b fixed and a-b shrinking.

    Returns:
        tuple: (rows, log-log slope of thm47 against a^2 - b^2)
    """
    rows = []
    for gap in gaps:
        qc_map = make_ellipse_map(0.5 * (total + gap), 0.5 * (total - gap))
        rows.append({
            "a_plus_b": total,
            "a_minus_b": gap,
            "inv_jacobian": qc_map.inv_jacobian_sup,
            "thm47": lower_bound_thm47(qc_map).value,
            "classical": payne_weinberger(qc_map.domain, qc_map.ellipticity_K).value,
        })
    slope = float(np.polyfit(np.log([row["inv_jacobian"] for row in rows]),
                             np.log([row["thm47"] for row in rows]), 1)[0])
    return rows, slope


def cmd_reproduce_examples(config):
    """
    Worked examples (thm47, classical, FEM) and the thin-ellipse sweep.

    Returns:
        dict: {"examples": [...], "orderings": [...], "thin_ellipse": [...], "thin_ellipse_slope": float}
    """
    examples = ordered_map(lambda map_id: _example_row(map_id, config), EXAMPLE_MAPS)
    orderings = [{"map": row["map"], "classical": row["classical"], "thm47": row["thm47"],
                  "holds": row["classical"] < row["thm47"]}
                 for row in examples if row["classical_applicable"]]
    sweep, slope = thin_ellipse_sweep()
    return {"examples": examples, "orderings": orderings, "thin_ellipse": sweep,
            "thin_ellipse_slope": slope}


def _fmt(value):
    return f"{value:.6g}"


def _run_estimate(config):
    bounds, best = cmd_estimate(config)
    rows = [{"kind": b.kind.value, "value": _fmt(b.value), "log10_value": _fmt(b.log10_value),
             "applicable": b.applicable, "best": "*" if b is best else ""} for b in bounds]
    print(f"Lower bounds for mu_1 on {config.map_id}:")
    print(report_service.format_table(rows, ("kind", "value", "log10_value", "applicable", "best")))
    if config.out:
        if config.format == "csv":
            report_service.write_csv([b.as_row() for b in bounds], config.out)
        else:
            report_service.write_json({"config": config.to_dict(),
                                       "bounds": [b.to_dict() for b in bounds],
                                       "best": best.kind.value if best else None}, config.out)
    return EXIT_OK


def _run_verify(config):
    report = cmd_verify(config)
    print(f"{report.map_id}: mu_1 (FEM) = {report.mu1_fem:.10g} on {report.n_vertices} vertices "
          f"(h = {report.mesh_h:.4f}, {report.solver})")
    rows = [{"kind": b.kind.value, "value": _fmt(b.value), "applicable": b.applicable,
             "holds": b.value <= report.mu1_fem * (1.0 + BOUND_TOLERANCE)} for b in report.bounds]
    print(report_service.format_table(rows, ("kind", "value", "applicable", "holds")))
    if config.out:
        if config.format == "json":
            report_service.write_json(dict(report.to_dict(), config=config.to_dict()), config.out)
        else:
            rows = [report_service.table_row("fem_mu1", report.mu1_fem,
                                             {"map": report.map_id, "mesh_h": report.mesh_h,
                                              "mu_sequence": report.mu_sequence})]
            report_service.write_csv(rows + [b.as_row() for b in report.bounds], config.out)
    violations = report.checks["violations"]
    if violations:
        logger.error(f"Bounds above the FEM eigenvalue: {', '.join(violations)}")
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def _run_constants(config):
    constants = cmd_constants(config)
    rows = [{"K": _fmt(c.K), "log10_M": f"{c.log10_M:.12g}", "beta_star - 1": f"{c.eps_star:.6e}",
             "beta_opt - 1": f"{c.eps_opt:.6e}", "beta_tilde - 1": f"{c.eps_tilde:.6e}"}
            for c in constants]
    print(report_service.format_table(rows, tuple(rows[0])))
    if config.out:
        if config.format == "csv":
            report_service.write_csv(
                [report_service.table_row("quasidisc_M", 0.0 if c.log10_M < -300 else 10.0 ** c.log10_M,
                                          c.to_dict(), log10_value=c.log10_M) for c in constants],
                config.out)
        else:
            report_service.write_json({"config": config.to_dict(),
                                       "constants": [c.to_dict() for c in constants]}, config.out)
        report_service.write_plot_data([(c.K, c.log10_M) for c in constants],
                                       report_service.plot_data_path(config.out))
    return EXIT_OK


def _run_reproduce_examples(config):
    result = cmd_reproduce_examples(config)
    print(report_service.format_table(
        [{key: _fmt(value) if isinstance(value, float) else value for key, value in row.items()}
         for row in result["examples"]],
        ("map", "thm47", "classical", "classical_kind", "mu1_fem")))
    for ordering in result["orderings"]:
        relation = "<" if ordering["holds"] else ">="
        print(f"{ordering['map']}: classical {ordering['classical']:.6g} {relation} "
              f"thm47 {ordering['thm47']:.6g}")
    print("\nThin ellipses, a + b = 3:")
    print(report_service.format_table(
        [{key: _fmt(value) for key, value in row.items()} for row in result["thin_ellipse"]],
        ("a_minus_b", "inv_jacobian", "thm47", "classical")))
    print(f"log-log slope of thm47 against a^2 - b^2: {result['thin_ellipse_slope']:.6f}")

    if config.out:
        if config.format == "json":
            report_service.write_json(dict(result, config=config.to_dict()), config.out)
        else:
            rows = []
            for row in result["examples"]:
                rows.append(report_service.table_row("thm47_inf", row["thm47"], {"map": row["map"]}))
                rows.append(report_service.table_row(row["classical_kind"], row["classical"],
                                                     {"map": row["map"],
                                                      "applicable": row["classical_applicable"]}))
                rows.append(report_service.table_row("fem_mu1", row["mu1_fem"], {"map": row["map"]}))
            for row in result["thin_ellipse"]:
                rows.append(report_service.table_row("thin_ellipse_thm47", row["thm47"], row))
                rows.append(report_service.table_row("thin_ellipse_classical", row["classical"], row))
            report_service.write_csv(rows, config.out)

    below = [row["map"] for row in result["examples"]
             if row["mu1_fem"] * (1.0 + BOUND_TOLERANCE) < row["thm47"]]
    if below:
        logger.error(f"FEM eigenvalue below the thm47 bound for {', '.join(below)}")
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


RUNNERS = {
    "estimate": _run_estimate,
    "verify": _run_verify,
    "constants": _run_constants,
    "reproduce-examples": _run_reproduce_examples,
}


def run(config):
    """Execute a resolved config and return the process exit code."""
    logger.info(f"Running {config.command} with {config.to_dict()}")
    return RUNNERS[config.command](config)


def main(argv=None):
    """
    Parse arguments, load .env settings and run the selected command.

    Returns:
        int: Exit code (0 ok, 2 bound violation, 3 solver failure, 4 config error)
    """
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        return run(config_from_args(args))
    except QCSpectralError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
