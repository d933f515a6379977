"""Command-line front end: ``parea solve | experiment | diagnose | export``.

Settings come from built-in defaults, then an optional flat JSON file given
with ``--config``, then the command line, later sources winning. The output
root is ``--out``, else ``$PAREA_OUT_DIR``, else the file's ``out_dir``,
else ``./parea-out``. Exit codes: 0 success, 1 configuration or I/O
error, 2 non-convergence.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from parea import artifacts
from parea.bregman import SolverConfig, solve
from parea.constants import (C_OMEGA_UNIT_SQUARE, DEFAULT_HISTORY_STRIDE, DEFAULT_LAMBDA, DEFAULT_MAX_ITER,
                             DEFAULT_OUT_DIR, DEFAULT_TOL, OUT_DIR_ENV)
from parea.duality import euler_lagrange_residual, extract, feasibility_residuals
from parea.enums import ReferenceMode
from parea.errors import Status, PAreaError, PAreaErrorInvalidArgument
from parea.flags import ReportFlag
from parea.grid import GridSpec
from parea.levelsets import admissibility_report
from parea.problems import ProblemFactory, ProblemSpec, example_paper, validate_hypotheses
from parea.stability import (NoiseModel, check_energy_stability, check_J_alignment, g_field_diagnostics,
                             perturb, run_sweep)

logger = logging.getLogger(__name__)

DEFAULTS = {
    "problem": "example-4.1",
    "n": 99,
    "lambda": DEFAULT_LAMBDA,
    "tol": DEFAULT_TOL,
    "max_iter": DEFAULT_MAX_ITER,
    "history_stride": DEFAULT_HISTORY_STRIDE,
    "closed_form": False,
    "pgm": False,
    "eps_char": None,
    "c_omega": C_OMEGA_UNIT_SQUARE,
    "deltas": [0.01, 0.035, 0.06],
    "seeds": [0, 1, 2, 3, 4],
    "reference": "exact",
    "jobs": 1,
    "histories": False,
    "input": None,
    "twin_delta": None,
    "twin_seed": 0,
    "num_iso": 5,
}
FILE_ONLY = {"out_dir"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise PAreaErrorInvalidArgument(message)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON settings file; flags win over it")
    parser.add_argument("--out", help=f"output root (else ${OUT_DIR_ENV}, else {DEFAULT_OUT_DIR})")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    parser.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    parser.add_argument("--problem", help="built-in problem name or path of a problem manifest")
    parser.add_argument("--n", type=int, help="interior nodes per axis, h = 1/(n+1) on the unit square")
    parser.add_argument("--lambda", dest="lambda", type=float, help="Bregman penalty")
    parser.add_argument("--tol", type=float, help="relative-change stopping threshold")
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--history-stride", type=int)
    parser.add_argument("--closed-form", action="store_true", default=None,
                        help="sample F and H from closed forms instead of the grid operators")
    parser.add_argument("--eps-char", type=float, help="characteristic threshold on |grad u + F|")
    parser.add_argument("--pgm", action="store_true", default=None, help="also write PGM renders")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parea", description="Weighted p-area minimization and its stability under "
                                               "perturbations of the prescribed curvature.")
    commands = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    commands.required = True

    p = commands.add_parser("solve", help="run the split Bregman solver on one problem")
    _common(p)

    p = commands.add_parser("experiment", help="noise sweep over deltas and seeds")
    _common(p)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--reference", choices=["exact", "zero-noise"])
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--c-omega", type=float)
    p.add_argument("--histories", action="store_true", default=None,
                   help="write the convergence history of every run")

    p = commands.add_parser("diagnose", help="duality, admissibility and G-field diagnostics")
    _common(p)
    p.add_argument("--input", help="solve output directory; solves afresh when omitted")
    p.add_argument("--twin-delta", type=float, help="noise level of a perturbed twin solve")
    p.add_argument("--twin-seed", type=int)
    p.add_argument("--num-iso", type=int)
    p.add_argument("--c-omega", type=float)

    p = commands.add_parser("export", help="write a problem manifest and field renders")
    _common(p)
    p.add_argument("--input", help="solve output directory whose fields are rendered too")
    p.add_argument("--num-iso", type=int)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    root = logging.getLogger("parea")
    for handler in [h for h in root.handlers if getattr(h, "_parea_cli", False)]:
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s %(message)s"))
    handler._parea_cli = True
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, the ``--config`` file and the given flags."""
    settings = dict(DEFAULTS)
    file_settings = {}
    if args.config:
        file_settings = artifacts.read_json(args.config)
        if not isinstance(file_settings, dict):
            raise PAreaErrorInvalidArgument(f"{args.config} must hold a JSON object")
        unknown = set(file_settings) - set(DEFAULTS) - FILE_ONLY
        if unknown:
            raise PAreaErrorInvalidArgument(f"unknown settings in {args.config}: {', '.join(sorted(unknown))}")
        settings.update({k: v for k, v in file_settings.items() if k in DEFAULTS})
    settings.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    settings["out_dir"] = Path(args.out or os.environ.get(OUT_DIR_ENV)
                               or file_settings.get("out_dir") or DEFAULT_OUT_DIR)
    settings["command"] = args.command
    return settings


def _solver_config(settings: dict) -> SolverConfig:
    return SolverConfig(lambda_=float(settings["lambda"]), tol=float(settings["tol"]),
                        max_iter=int(settings["max_iter"]), history_stride=int(settings["history_stride"]))


def load_problem(settings: dict) -> ProblemSpec:
    name = settings["problem"]
    n = int(settings["n"])
    if name in ProblemFactory.NAMES:
        if name == "example-4.1":
            return example_paper(GridSpec.unit_square(n), consistent=not settings["closed_form"])
        return ProblemFactory(n).from_name(name)
    if Path(name).exists():
        return ProblemFactory.from_manifest(name)
    raise PAreaErrorInvalidArgument(
        f"unknown problem {name!r}; choose from {', '.join(ProblemFactory.NAMES)} or a manifest path")


def _output(settings: dict, problem: ProblemSpec) -> Path:
    return settings["out_dir"] / problem.name / settings["command"]


def cmd_solve(settings: dict) -> int:
    problem = load_problem(settings)
    result = solve(problem, _solver_config(settings))
    hypotheses = validate_hypotheses(problem, float(settings["c_omega"]))
    with artifacts.ArtifactDirectory(_output(settings, problem)) as out:
        artifacts.write_solve_result(out, problem, result, pgm=bool(settings["pgm"]),
                                     extra={"hypotheses": hypotheses.as_dict()})
    print(f"{problem.name}: iterations={result.iterations} converged={result.converged} "
          f"energy={result.final_energy:.10g} rel_change={result.final_rel_change:.3e}")
    if not result.converged:
        return Status.ERROR_NOT_CONVERGED.exit_code
    return Status.SUCCESS.exit_code


def cmd_experiment(settings: dict) -> int:
    problem = load_problem(settings)
    try:
        reference = ReferenceMode.from_name(settings["reference"])
    except ValueError as e:
        raise PAreaErrorInvalidArgument(str(e)) from None
    report = run_sweep(problem, settings["deltas"], settings["seeds"], _solver_config(settings),
                       reference=reference, jobs=int(settings["jobs"]), eps_char=settings["eps_char"],
                       c_omega=float(settings["c_omega"]), keep_histories=bool(settings["histories"]))
    with artifacts.ArtifactDirectory(_output(settings, problem)) as out:
        artifacts.write_stability_report(out, report)
        for row, history in zip(report.rows, report.histories):
            artifacts.write_history(out, history.tolist(),
                                    name=f"history_delta{row.delta:g}_seed{row.seed}.csv")
    for line in report.table():
        print(line)
    for fit in report.fits:
        print(f"{fit.metric}: slope={fit.slope:.4f} range=[{fit.low:.4f}, {fit.high:.4f}]")
    if not all(row.converged for row in report.rows):
        return Status.ERROR_NOT_CONVERGED.exit_code
    return Status.SUCCESS.exit_code


def cmd_diagnose(settings: dict) -> int:
    config = _solver_config(settings)
    if settings["input"]:
        problem, result = artifacts.load_solve_result(settings["input"])
    else:
        problem = load_problem(settings)
        result = solve(problem, config)
    dual = extract(problem, result.u, settings["eps_char"])
    feasibility = feasibility_residuals(problem, dual)
    admissibility = admissibility_report(problem, result.u, dual, int(settings["num_iso"]))
    report = {
        "problem": problem.name,
        "converged": result.converged,
        "iterations": result.iterations,
        "feasibility": feasibility.as_dict(),
        "euler_lagrange": euler_lagrange_residual(problem, result).as_dict(),
        "admissibility": admissibility.as_dict(),
        "hypotheses": validate_hypotheses(problem, float(settings["c_omega"])).as_dict(),
    }
    if ReportFlag.FULL_MASK in admissibility.flags:
        logger.warning("full characteristic mask problem=%s", problem.name)

    with artifacts.ArtifactDirectory(_output(settings, problem)) as out:
        if settings["twin_delta"] is not None:
            model = NoiseModel(float(settings["twin_delta"]), int(settings["twin_seed"]))
            twin = problem.with_H(perturb(problem.H, model))
            twin_result = solve(twin, config)
            twin_dual = extract(twin, twin_result.u, settings["eps_char"])
            g = g_field_diagnostics(dual, twin_dual)
            report["twin"] = {
                "delta": model.delta, "seed": model.seed, "converged": twin_result.converged,
                "g_field": g.as_dict(),
                "alignment": check_J_alignment(dual, twin_dual, problem.a).as_dict(),
                "energy_stability": check_energy_stability(problem, twin, result.u, twin_result.u,
                                                           config.tol).as_dict(),
            }
            out.write_pgm("G_magnitude.pgm", g.G.magnitude().values)
        out.write_json("diagnose.json", report)
        out.write_pgm("J_magnitude.pgm", dual.J.magnitude().values)
        out.write_pgm("sigma.pgm", dual.sigma.values)
        out.write_pgm("mask.pgm", dual.characteristic_mask.astype(float))
        artifacts.write_polylines(out, admissibility.level_sets)
    print(f"{problem.name}: gap={feasibility.gap:.4e} div_residual={feasibility.div_residual_l1:.4e} "
          f"mask_fraction={admissibility.mask_fraction:.4f} flags={'|'.join(admissibility.flags.names())}")
    return Status.SUCCESS.exit_code


def cmd_export(settings: dict) -> int:
    problem = load_problem(settings)
    with artifacts.ArtifactDirectory(_output(settings, problem)) as out:
        manifest = artifacts.save_problem(problem, out.path("problem"))
        out.adopt(sorted(manifest.parent.iterdir()))
        out.write_pgm("a.pgm", problem.a.values)
        out.write_pgm("H.pgm", problem.H.values)
        out.write_pgm("F_magnitude.pgm", problem.F.magnitude().values)
        out.write_json("hypotheses.json", validate_hypotheses(problem, float(settings["c_omega"])).as_dict())
        if settings["input"]:
            solved, result = artifacts.load_solve_result(settings["input"])
            out.write_pgm("u.pgm", result.u.values)
            dual = extract(solved, result.u, settings["eps_char"])
            report = admissibility_report(solved, result.u, dual, int(settings["num_iso"]))
            artifacts.write_polylines(out, report.level_sets)
    print(f"{problem.name}: exported to {out.root}")
    return Status.SUCCESS.exit_code


COMMANDS = {
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "diagnose": cmd_diagnose,
    "export": cmd_export,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose, args.quiet)
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except PAreaError as e:
        print(f"parea: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, TypeError) as e:
        print(f"parea: invalid setting: {e}", file=sys.stderr)
        return Status.ERROR_INVALID_ARGUMENT.exit_code


if __name__ == "__main__":
    sys.exit(main())
