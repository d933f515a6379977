"""Level curves of NODE fields and the admissibility diagnostics built on them.

Curves are traced by marching squares over the cells of the NODE lattice
with linear interpolation along cell edges. A corner counts as above the
iso value when its value is strictly greater. Ambiguous (saddle) cells are
resolved with the cell-centre average.
"""
import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from parea.duality import DualFields
from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.flags import ReportFlag
from parea.grid import ScalarField, curl, norms
from parea.problems import ProblemSpec
from parea.structs import AdmissibilityReport, LevelSetComponent, LevelSetReport

logger = logging.getLogger(__name__)

# corners counter-clockwise from (i, j); edge k joins corner k and corner k+1
_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))

_SEGMENTS = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),),
    6: ((0, 2),), 7: ((3, 2),), 8: ((2, 3),), 9: ((0, 2),),
    11: ((1, 2),), 12: ((1, 3),), 13: ((0, 1),), 14: ((3, 0),),
}
# saddles: cut off corners 1 and 3, or corners 0 and 2
_CUT_ODD = ((0, 1), (2, 3))
_CUT_EVEN = ((3, 0), (1, 2))

EdgeKey = Tuple[Tuple[int, int], Tuple[int, int]]


def _edge_key(i: int, j: int, edge: int) -> EdgeKey:
    a, b = _EDGES[edge]
    n0 = (i + _CORNERS[a][0], j + _CORNERS[a][1])
    n1 = (i + _CORNERS[b][0], j + _CORNERS[b][1])
    return (n0, n1) if n0 < n1 else (n1, n0)


class _Tracer:
    def __init__(self, v: ScalarField):
        self.values = v.values
        self.x, self.y = v.spec.axes(Layout.NODE)
        self.nx, self.ny = self.values.shape

    def crossing(self, key: EdgeKey, iso: float) -> Tuple[float, float]:
        (i0, j0), (i1, j1) = key
        v0, v1 = self.values[i0, j0], self.values[i1, j1]
        t = (iso - v0) / (v1 - v0)
        return (self.x[i0] + t * (self.x[i1] - self.x[i0]),
                self.y[j0] + t * (self.y[j1] - self.y[j0]))

    def on_frame(self, key: EdgeKey) -> bool:
        (i0, j0), (i1, j1) = key
        return ((i0 == i1 and i0 in (0, self.nx - 1))
                or (j0 == j1 and j0 in (0, self.ny - 1)))

    def segments(self, iso: float) -> List[Tuple[EdgeKey, EdgeKey]]:
        above = self.values > iso
        bits = above.astype(np.int8)
        case = bits[:-1, :-1] | bits[1:, :-1] << 1 | bits[1:, 1:] << 2 | bits[:-1, 1:] << 3
        result = []
        for i, j in zip(*np.nonzero((case != 0) & (case != 15))):
            c = int(case[i, j])
            if c in (5, 10):
                centre = self.values[i:i + 2, j:j + 2].mean() > iso
                pairs = _CUT_ODD if centre == bool(above[i, j]) else _CUT_EVEN
            else:
                pairs = _SEGMENTS[c]
            for e0, e1 in pairs:
                result.append((_edge_key(i, j, e0), _edge_key(i, j, e1)))
        return result

    def chains(self, iso: float) -> List[Tuple[List[EdgeKey], bool]]:
        """Join segments sharing an edge into ``(keys, closed)`` chains."""
        segments = self.segments(iso)
        incident: Dict[EdgeKey, List[int]] = defaultdict(list)
        for index, (k0, k1) in enumerate(segments):
            incident[k0].append(index)
            incident[k1].append(index)
        used = [False] * len(segments)

        def walk(start: EdgeKey) -> List[EdgeKey]:
            keys = [start]
            current = start
            while True:
                following = [s for s in incident[current] if not used[s]]
                if not following:
                    return keys
                s = following[0]
                used[s] = True
                k0, k1 = segments[s]
                current = k1 if k0 == current else k0
                keys.append(current)

        result = []
        for key in sorted(k for k, s in incident.items() if len(s) == 1):
            if not used[incident[key][0]]:
                result.append((walk(key), False))
        for index in range(len(segments)):
            if not used[index]:
                result.append((walk(segments[index][0]), True))
        return result


def _default_isos(v: ScalarField, num_iso: int) -> List[float]:
    lo, hi = v.min(), v.max()
    qs = np.quantile(v.values, [k / (num_iso + 1) for k in range(1, num_iso + 1)])
    return sorted({float(q) for q in qs if lo < q < hi})


def trace(v: ScalarField, num_iso: int = 5, iso_values: Optional[Sequence[float]] = None) -> LevelSetReport:
    """Trace level curves of ``v``.

    Args:
        v: NODE field
        num_iso: number of iso values taken at the quantiles
            ``k / (num_iso + 1)`` of the values of ``v``
        iso_values: explicit iso values, used instead of the quantiles

    Returns:
        one component per connected curve. A component touches the boundary
        when one of its ends lies on an edge of the outer node frame; closed
        components repeat their first vertex at the end.

    Raises:
        PAreaErrorInvalidArgument: if ``num_iso < 1``
    """
    if v.layout is not Layout.NODE:
        raise PAreaErrorStructureMismatch("level sets are traced on NODE fields")
    if num_iso < 1:
        raise PAreaErrorInvalidArgument("num_iso must be at least 1")
    gx, gy = np.gradient(v.values, v.spec.h) if min(v.values.shape) > 1 else (np.zeros(1), np.zeros(1))
    min_grad = float(np.hypot(gx, gy).min())
    if v.max() == v.min():
        logger.warning("level sets of a constant field")
        return LevelSetReport(iso_values=(), components=(), K_observed=0.0, interior_component_count=0,
                              min_grad_magnitude=0.0, flags=ReportFlag.CONSTANT_FIELD)

    isos = sorted(float(c) for c in iso_values) if iso_values is not None else _default_isos(v, num_iso)
    tracer = _Tracer(v)
    components = []
    for iso in isos:
        for index, (keys, closed) in enumerate(tracer.chains(iso)):
            points = np.array([tracer.crossing(k, iso) for k in keys])
            length = float(np.hypot(*np.diff(points, axis=0).T).sum()) if len(points) > 1 else 0.0
            touches = not closed and (tracer.on_frame(keys[0]) or tracer.on_frame(keys[-1]))
            points.setflags(write=False)
            components.append(LevelSetComponent(iso=iso, component=index, length=length,
                                                touches_boundary=touches, closed=closed, polyline=points))
    k_observed = max((c.length for c in components), default=0.0)
    interior = sum(1 for c in components if not c.touches_boundary)
    logger.debug("level sets isos=%d components=%d K=%.6g", len(isos), len(components), k_observed)
    return LevelSetReport(iso_values=tuple(isos), components=tuple(components), K_observed=k_observed,
                          interior_component_count=interior, min_grad_magnitude=min_grad)


def admissibility_report(problem: ProblemSpec, u: ScalarField, dual: DualFields,
                         num_iso: int = 5) -> AdmissibilityReport:
    """Observed bounds on ``sigma`` and ``|J|`` and the level curves of ``v = u + f``.

    ``f`` is the potential of ``F`` when the problem carries one; otherwise
    the curves of ``u`` are traced and the report is flagged
    ``NON_CONSERVATIVE``. Characteristic points make the solution
    inadmissible.
    """
    flags = ReportFlag.NONE
    off = dual.off_mask
    curl_sup = norms(curl(problem.F)).linf
    if off.any():
        sigma = dual.sigma.values[off]
        magnitude = np.hypot(dual.J.px, dual.J.py)[off]
        sigma0, sigma1 = float(sigma.min()), float(sigma.max())
        j_min, j_max = float(magnitude.min()), float(magnitude.max())
    else:
        sigma0 = sigma1 = j_min = j_max = None
        flags |= ReportFlag.FULL_MASK
        logger.warning("every point is characteristic problem=%s", problem.name)
    if dual.characteristic_mask.any():
        flags |= ReportFlag.INADMISSIBLE

    if problem.potential is not None:
        v = u + problem.potential
    else:
        v = u
        flags |= ReportFlag.NON_CONSERVATIVE
    level_sets = trace(v, num_iso)
    flags |= level_sets.flags
    return AdmissibilityReport(sigma0_obs=sigma0, sigma1_obs=sigma1, J_min=j_min, J_max=j_max,
                               mask_fraction=dual.mask_fraction, curl_F_sup=curl_sup,
                               level_sets=level_sets, flags=flags)


def chord_length(a: float, b: float, iso: float, box: Tuple[float, float, float, float]) -> float:
    """Length of ``{a x + b y = iso}`` inside ``box = (x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = box
    points = []
    if b != 0:
        for x in (x0, x1):
            y = (iso - a * x) / b
            if y0 <= y <= y1:
                points.append((x, y))
    if a != 0:
        for y in (y0, y1):
            x = (iso - b * y) / a
            if x0 <= x <= x1:
                points.append((x, y))
    if len(points) < 2:
        return 0.0
    points = sorted(set(points))
    return max(math.dist(p, q) for p in points for q in points)
