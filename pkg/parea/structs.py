import dataclasses
import math
import typing
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from parea.flags import ReportFlag

if typing.TYPE_CHECKING:
    from parea.grid import VectorField

_SKIP = object()


def _jsonable(value):
    """Convert a report value to plain JSON types, or ``_SKIP`` for field data."""
    if isinstance(value, PrintableRecord):
        return value.as_dict()
    if isinstance(value, ReportFlag):
        return value.names()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, np.ndarray):
        return _SKIP
    if isinstance(value, (list, tuple)):
        items = [_jsonable(x) for x in value]
        return [x for x in items if x is not _SKIP]
    if isinstance(value, dict):
        items = {str(k): _jsonable(v) for k, v in value.items()}
        return {k: v for k, v in items.items() if v is not _SKIP}
    return _SKIP


class PrintableRecord:
    """
    Base for report records that produces a readable :func:`__str__`
    and a JSON-ready :func:`as_dict`.

    Examples:
        instead of::

            JAlignment(alignment_integral=0.0012345678901234, j_diff_l1=...)

        records print as::

            JAlignment(alignment_integral: 1.2346e-03, j_diff_l1: ...)
    """

    _fmt_: typing.ClassVar[typing.Dict[str, str]] = {"<default>": "%s"}
    """typing.Dict[str, str]: formatting for given fields

    Default formatting for all fields can be set with key "<default>".
    Field data (arrays and fields) is always left out of the string, as are
    dataclass fields declared with ``metadata={"skip": True}``.
    """

    def __str__(self):
        result = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.metadata.get("skip") or _jsonable(value) is _SKIP:
                continue
            fmt = self._fmt_.get(f.name, self._fmt_.get("<default>", "%s"))
            if isinstance(value, (float, np.floating)) or "%s" in fmt:
                text = fmt % (value,)
            else:
                text = "%s" % (value,)
            result.append(f"{f.name}: {text}")
        return self.__class__.__name__ + "(" + ", ".join(result) + ")"

    def as_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            if f.metadata.get("skip"):
                continue
            value = _jsonable(getattr(self, f.name))
            if value is not _SKIP:
                d[f.name] = value
        return d


@dataclass(frozen=True)
class FeasibilityResiduals(PrintableRecord):
    _fmt_ = {"<default>": "%.4e"}

    div_residual_l1: float
    magnitude_violation_linf: float
    gap: float
    energy: float
    dual_value: float


@dataclass(frozen=True)
class EulerLagrangeResidual(PrintableRecord):
    _fmt_ = {"<default>": "%.4e"}

    residual_l1: float
    split_residual_linf: float
    excluded_fraction: float


@dataclass(frozen=True)
class HypothesisReport(PrintableRecord):
    _fmt_ = {"<default>": "%.6g"}

    m: float
    M: float
    k1: float
    h_sup: float
    c_omega: float
    threshold: float
    smallness_holds: bool
    l1_ceiling: Optional[float]
    curl_F_sup: float
    flags: ReportFlag = ReportFlag.NONE


@dataclass(frozen=True)
class EnergyStability(PrintableRecord):
    _fmt_ = {"<default>": "%.4e"}

    lhs: float
    rhs: float
    slack: float
    holds: bool


@dataclass(frozen=True)
class JAlignment(PrintableRecord):
    _fmt_ = {"<default>": "%.4e"}

    alignment_integral: float
    j_diff_l1: float
    chain_rhs: float
    chain_holds: bool
    min_pointwise: float
    identity_residual: float
    identity_holds: bool


@dataclass(frozen=True)
class GFieldDiagnostics(PrintableRecord):
    _fmt_ = {"<default>": "%.4e"}

    G: "VectorField"
    grad_G_l1: float
    j_diff_l1: float
    ratio: Optional[float]


@dataclass(frozen=True, eq=False)
class LevelSetComponent(PrintableRecord):
    _fmt_ = {"length": "%.6f"}

    iso: float
    component: int
    length: float
    touches_boundary: bool
    closed: bool
    polyline: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LevelSetReport(PrintableRecord):
    iso_values: Tuple[float, ...]
    components: Tuple[LevelSetComponent, ...]
    K_observed: float
    interior_component_count: int
    min_grad_magnitude: float
    flags: ReportFlag = ReportFlag.NONE

    def components_at(self, iso: float) -> List[LevelSetComponent]:
        return [c for c in self.components if c.iso == iso]


@dataclass(frozen=True)
class AdmissibilityReport(PrintableRecord):
    _fmt_ = {"<default>": "%.6g"}

    sigma0_obs: Optional[float]
    sigma1_obs: Optional[float]
    J_min: Optional[float]
    J_max: Optional[float]
    mask_fraction: float
    curl_F_sup: float
    level_sets: LevelSetReport
    flags: ReportFlag = ReportFlag.NONE


@dataclass(frozen=True)
class StabilityRow(PrintableRecord):
    """One perturbed solve of a sweep and every metric computed from it."""
    _fmt_ = {"<default>": "%.6g"}

    delta: float
    seed: int
    eps: float
    rel_l2_err: float
    max_err: float
    u_l1_diff: float
    J_l1_diff: float
    grad_l1_diff: float
    sigma_l1_diff: float
    energy_diff: float
    energy_bound_lhs: float
    energy_bound_rhs: float
    energy_bound_holds: bool
    alignment_integral: float
    alignment_bound: float
    alignment_bound_holds: bool
    j_chain_rhs: float
    j_chain_holds: bool
    l1_ceiling_holds: Optional[bool]
    min_alignment: float
    grad_G_l1: float
    g_ratio: Optional[float]
    iterations: int
    converged: bool
    flags: ReportFlag = ReportFlag.NONE

    @property
    def fittable(self) -> bool:
        return self.converged and self.eps > 0.0


@dataclass(frozen=True)
class ExponentFit(PrintableRecord):
    _fmt_ = {"<default>": "%.4f"}

    metric: str
    slope: float
    intercept: float
    low: float
    high: float
    n_points: int


@dataclass(frozen=True)
class StabilityReport(PrintableRecord):
    rows: Tuple[StabilityRow, ...]
    fits: Tuple[ExponentFit, ...]
    problem: str
    reference: str
    histories: Tuple[np.ndarray, ...] = field(default=(), compare=False, repr=False,
                                              metadata={"skip": True})
    """(iteration, rel_change, energy) arrays aligned with ``rows``; empty unless requested."""

    def fit(self, metric: str) -> Optional[ExponentFit]:
        return next((f for f in self.fits if f.metric == metric), None)

    def medians(self, metric: str) -> List[Tuple[float, float]]:
        """Per-delta ``(delta, median)`` of a row metric over converged rows."""
        result = []
        for delta in sorted({r.delta for r in self.rows}):
            values = [getattr(r, metric) for r in self.rows if r.delta == delta and r.converged]
            if values:
                result.append((delta, float(np.median(values))))
        return result

    def table(self) -> Sequence[str]:
        """Summary lines: delta and median relative L2 error."""
        lines = ["delta  median_rel_l2_err"]
        lines += [f"{d:<6g} {v:.4e}" for d, v in self.medians("rel_l2_err")]
        return lines
