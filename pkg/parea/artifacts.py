"""Files written and read by the command-line front end.

* field CSV: one header line ``nx=..,ny=..,x0=..,y0=..,x1=..,y1=..,layout=..``
  followed by one row per x-index, values with 17 significant digits
* binary PGM (P5) renders, min-max normalised, top row is the largest y
* JSON with sorted keys and a 2-space indent
* problem manifests: a JSON file naming the CSV file of every field
"""
import csv
import dataclasses
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from parea.bregman import SolveResult, SolverConfig, history_rows
from parea.constants import CSV_FORMAT
from parea.enums import Layout
from parea.errors import PAreaErrorIO
from parea.flags import ReportFlag
from parea.grid import GridSpec, ScalarField, VectorField
from parea.problems import ProblemSpec
from parea.structs import LevelSetReport, StabilityReport, StabilityRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST = "manifest.json"
PROBLEM_MANIFEST = "problem.json"


def _header(spec: GridSpec, layout: Layout) -> str:
    fields = dict(spec.as_dict(), layout=layout.name.lower())
    return ",".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in fields.items())


def _parse_header(line: str):
    try:
        items = dict(item.split("=", 1) for item in line.strip().split(","))
        spec = GridSpec(int(items["nx"]), int(items["ny"]),
                        float(items["x0"]), float(items["y0"]), float(items["x1"]), float(items["y1"]))
        layout = Layout[items["layout"].upper()]
    except (KeyError, ValueError) as e:
        raise PAreaErrorIO(f"bad field header {line.strip()!r}") from e
    return spec, layout


def write_field_csv(path: PathLike, field: ScalarField) -> Path:
    path = Path(path)
    np.savetxt(path, np.atleast_2d(field.values), fmt=CSV_FORMAT, delimiter=",",
               header=_header(field.spec, field.layout), comments="")
    return path


def read_field_csv(path: PathLike) -> ScalarField:
    """Field written by :func:`write_field_csv`.

    Raises:
        PAreaErrorIO: if the file is missing or malformed
    """
    path = Path(path)
    try:
        with path.open() as f:
            spec, layout = _parse_header(f.readline())
        values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as e:
        raise PAreaErrorIO(f"cannot read {path}") from e
    except ValueError as e:
        raise PAreaErrorIO(f"malformed values in {path}") from e
    return ScalarField(spec, values, layout)


def write_vector_csv(directory: PathLike, stem: str, field: VectorField) -> List[Path]:
    """Components to ``<stem>_x.csv`` and ``<stem>_y.csv``."""
    directory = Path(directory)
    paths = []
    for suffix, values in (("x", field.px), ("y", field.py)):
        paths.append(write_field_csv(directory / f"{stem}_{suffix}.csv",
                                     ScalarField(field.spec, values, Layout.FLUX)))
    return paths


def read_vector_csv(directory: PathLike, stem: str) -> VectorField:
    directory = Path(directory)
    px = read_field_csv(directory / f"{stem}_x.csv")
    py = read_field_csv(directory / f"{stem}_y.csv")
    return VectorField(px.spec, px.values, py.values)


def write_pgm(path: PathLike, values: np.ndarray) -> Path:
    """8-bit binary greymap; constant input renders black."""
    path = Path(path)
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    scaled = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
    image = np.round(255 * scaled).astype(np.uint8).T[::-1]
    height, width = image.shape
    with path.open("wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (width, height))
        f.write(np.ascontiguousarray(image).tobytes())
    return path


def write_json(path: PathLike, data) -> Path:
    path = Path(path)
    with path.open("w") as f:
        json.dump(data, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def read_json(path: PathLike):
    path = Path(path)
    try:
        with path.open() as f:
            return json.load(f)
    except OSError as e:
        raise PAreaErrorIO(f"cannot read {path}") from e
    except json.JSONDecodeError as e:
        raise PAreaErrorIO(f"invalid JSON in {path}: {e}") from e


def _cell(value) -> str:
    if isinstance(value, ReportFlag):
        return "|".join(value.names())
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return CSV_FORMAT % value
    return str(value)


def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])
    return path


class ArtifactDirectory:
    """Output directory that records what is written to it.

    Using the resource manager syntax is preferred::

        with ArtifactDirectory("out/solve") as out:
            out.write_field("u.csv", result.u)

    The directory is created on enter; ``manifest.json`` listing every
    recorded file is written on exit.
    """

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self.files: List[str] = []

    def __enter__(self):
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise PAreaErrorIO(f"cannot create {self.root}") from e
        return self

    def __exit__(self, *argc, **kwargs):
        write_json(self.root / MANIFEST, {"files": sorted(set(self.files))})

    def _record(self, path: Path) -> Path:
        self.files.append(path.relative_to(self.root).as_posix())
        return path

    def path(self, name: str) -> Path:
        return self.root / name

    def write_field(self, name: str, field: ScalarField) -> Path:
        return self._record(write_field_csv(self.path(name), field))

    def write_vector(self, stem: str, field: VectorField) -> List[Path]:
        return [self._record(p) for p in write_vector_csv(self.root, stem, field)]

    def write_pgm(self, name: str, values: np.ndarray) -> Path:
        return self._record(write_pgm(self.path(name), values))

    def write_json(self, name: str, data) -> Path:
        return self._record(write_json(self.path(name), data))

    def write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        return self._record(write_rows(self.path(name), header, rows))

    def adopt(self, paths: Iterable[Path]) -> None:
        """Record files some other writer put into the directory."""
        for p in paths:
            self._record(Path(p))


def save_problem(problem: ProblemSpec, directory: PathLike) -> Path:
    """Write every field of ``problem`` as CSV plus a ``problem.json`` manifest.

    Returns:
        the manifest path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fields = {"a": "a.csv", "H": "H.csv", "F": "F"}
    write_field_csv(directory / "a.csv", problem.a)
    write_field_csv(directory / "H.csv", problem.H)
    write_vector_csv(directory, "F", problem.F)
    if problem.exact_u is not None:
        fields["exact_u"] = "exact_u.csv"
        write_field_csv(directory / "exact_u.csv", problem.exact_u)
    if problem.exact_J is not None:
        fields["exact_J"] = "exact_J"
        write_vector_csv(directory, "exact_J", problem.exact_J)
    if problem.potential is not None:
        fields["potential"] = "potential.csv"
        write_field_csv(directory / "potential.csv", problem.potential)
    manifest = {"name": problem.name, "grid": problem.spec.as_dict(),
                "m": problem.m, "M": problem.M, "fields": fields}
    path = write_json(directory / PROBLEM_MANIFEST, manifest)
    logger.debug("problem saved name=%s path=%s", problem.name, path)
    return path


def load_problem(path: PathLike) -> ProblemSpec:
    """Problem from a manifest written by :func:`save_problem`.

    Args:
        path: the manifest, or the directory holding ``problem.json``

    Raises:
        PAreaErrorIO: for missing files or a malformed manifest
    """
    path = Path(path)
    if path.is_dir():
        path = path / PROBLEM_MANIFEST
    manifest = read_json(path)
    directory = path.parent
    try:
        fields = manifest["fields"]
        optional = {}
        if "exact_u" in fields:
            optional["exact_u"] = read_field_csv(directory / fields["exact_u"])
        if "exact_J" in fields:
            optional["exact_J"] = read_vector_csv(directory, fields["exact_J"])
        if "potential" in fields:
            optional["potential"] = read_field_csv(directory / fields["potential"])
        return ProblemSpec(spec=GridSpec(**manifest["grid"]),
                           a=read_field_csv(directory / fields["a"]),
                           F=read_vector_csv(directory, fields["F"]),
                           H=read_field_csv(directory / fields["H"]),
                           name=manifest.get("name", path.parent.name),
                           m=manifest.get("m"), M=manifest.get("M"),
                           **optional)
    except (KeyError, TypeError) as e:
        raise PAreaErrorIO(f"malformed problem manifest {path}") from e


def stability_rows(report: StabilityReport):
    header = [f.name for f in dataclasses.fields(StabilityRow)]
    rows = [[getattr(row, name) for name in header] for row in report.rows]
    return header, rows


def write_stability_report(out: ArtifactDirectory, report: StabilityReport, stem: str = "stability") -> None:
    """``<stem>.csv`` with one row per run and ``<stem>.json`` with rows, fits and medians."""
    header, rows = stability_rows(report)
    out.write_rows(f"{stem}.csv", header, rows)
    summary = report.as_dict()
    summary["median_rel_l2_err"] = [[d, v] for d, v in report.medians("rel_l2_err")]
    out.write_json(f"{stem}.json", summary)


def write_polylines(out: ArtifactDirectory, report: LevelSetReport, name: str = "polylines.csv") -> Path:
    """``(iso, component, x, y)`` per polyline vertex."""
    rows = ([c.iso, c.component, float(x), float(y)]
            for c in report.components for x, y in c.polyline)
    return out.write_rows(name, ["iso", "component", "x", "y"], rows)


def write_history(out: ArtifactDirectory, rows, name: str = "history.csv") -> Path:
    return out.write_rows(name, ["iteration", "rel_change", "energy"], rows)


def write_solve_result(out: ArtifactDirectory, problem: ProblemSpec, result: SolveResult,
                       pgm: bool = False, extra: Optional[dict] = None) -> None:
    """Fields, summary, history and the problem manifest of one solve."""
    out.write_field("u.csv", result.u)
    out.write_vector("d", result.d)
    out.write_vector("b", result.b)
    summary = dict(result.summary(), problem=problem.name, grid=problem.spec.as_dict(),
                   config=result.config.as_dict())
    summary.update(extra or {})
    out.write_json("summary.json", summary)
    write_history(out, history_rows(result))
    if pgm:
        out.write_pgm("u.pgm", result.u.values)
    manifest = save_problem(problem, out.path("problem"))
    out.adopt(sorted(manifest.parent.iterdir()))


def load_solve_result(directory: PathLike) -> Tuple[ProblemSpec, SolveResult]:
    """Problem and result from a directory written by :func:`write_solve_result`.

    The convergence history is not read back.

    Raises:
        PAreaErrorIO: if a file is missing or malformed
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise PAreaErrorIO(f"no solve output at {directory}")
    problem = load_problem(directory / "problem")
    summary = read_json(directory / "summary.json")
    try:
        config = SolverConfig(lambda_=summary["config"]["lambda"], tol=summary["config"]["tol"],
                              max_iter=summary["config"]["max_iter"],
                              history_stride=summary["config"]["history_stride"])
        result = SolveResult(u=read_field_csv(directory / "u.csv"),
                             d=read_vector_csv(directory, "d"),
                             b=read_vector_csv(directory, "b"),
                             iterations=int(summary["iterations"]),
                             converged=bool(summary["converged"]),
                             rel_change_history=(), energy_history=(), history_iterations=(),
                             config=config)
    except (KeyError, TypeError) as e:
        raise PAreaErrorIO(f"malformed solve summary in {directory}") from e
    return problem, result
