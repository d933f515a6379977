"""Problem data ``(a, F, H)`` for ``min  sum a|grad u + F| + H u`` with zero boundary values.

Closed-form problems are built by the manufactured-solution pattern: pick a
zero-boundary ``u`` and a nowhere-vanishing direction field ``W``, then set
``F = W - grad u`` so that ``grad u + F = W``, ``J = a W / |W|`` and
``H = div J``. With ``consistent=True`` the gradient and divergence are the
grid operators, which makes the sampled ``u`` an exact minimizer of the
discrete problem.
"""
import dataclasses
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from parea.constants import C_OMEGA_UNIT_SQUARE
from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.flags import ReportFlag
from parea.grid import GridSpec, ScalarField, VectorField, gradient, divergence, curl, norms
from parea.structs import HypothesisReport

logger = logging.getLogger(__name__)

ScalarExpr = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorExpr = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one weighted p-area problem on one grid.

    Attributes:
        spec: the grid all fields are sampled on
        a: positive weight on the FLUX lattice
        F: vector field on the FLUX lattice
        H: prescribed curvature on the NODE lattice
        name: identifier used in reports and file names
        exact_u: known minimizer, zero on the boundary
        exact_J: known dual vector field
        potential: ``f`` with ``F = grad f`` when ``F`` is conservative,
            sampled on the NODE lattice
        m, M: bounds ``m <= a <= M``; taken from ``a`` when omitted
    """
    spec: GridSpec
    a: ScalarField
    F: VectorField
    H: ScalarField
    name: str = "custom"
    exact_u: Optional[ScalarField] = None
    exact_J: Optional[VectorField] = None
    potential: Optional[ScalarField] = None
    m: Optional[float] = None
    M: Optional[float] = None

    def __post_init__(self):
        for label, f, layout in (("a", self.a, Layout.FLUX), ("F", self.F, Layout.FLUX),
                                 ("H", self.H, Layout.NODE), ("exact_u", self.exact_u, Layout.NODE),
                                 ("exact_J", self.exact_J, Layout.FLUX),
                                 ("potential", self.potential, Layout.NODE)):
            if f is None:
                continue
            if f.spec != self.spec or f.layout is not layout:
                raise PAreaErrorStructureMismatch(
                    f"{label} must be sampled on the {layout.name} lattice of {self.spec}")
        if self.m is None:
            object.__setattr__(self, "m", self.a.min())
        if self.M is None:
            object.__setattr__(self, "M", self.a.max())
        if not (self.m > 0):
            raise PAreaErrorInvalidArgument(f"weight bound m={self.m} must be positive")
        if self.a.min() < self.m or self.a.max() > self.M:
            raise PAreaErrorInvalidArgument(
                f"weight outside [{self.m}, {self.M}]: range [{self.a.min()}, {self.a.max()}]")

    @property
    def k1(self) -> float:
        """``||F||_1``."""
        return norms(self.F).l1

    @property
    def is_conservative(self) -> bool:
        return self.potential is not None

    def with_H(self, H: ScalarField, name: Optional[str] = None) -> "ProblemSpec":
        """Same ``a`` and ``F`` with another curvature; exact fields are dropped."""
        return dataclasses.replace(self, H=H, exact_u=None, exact_J=None,
                                   name=name or f"{self.name}~")


def bubble(spec: GridSpec) -> ScalarExpr:
    """``(x-x0)(x1-x)(y-y0)(y1-y)``, vanishing on the boundary of the grid's domain."""
    def fn(x, y):
        return (x - spec.x0) * (spec.x1 - x) * (y - spec.y0) * (spec.y1 - y)
    return fn


def _boundary_points(spec: GridSpec, count: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    s = np.linspace(0.0, 1.0, count)
    xs = spec.x0 + s * (spec.x1 - spec.x0)
    ys = spec.y0 + s * (spec.y1 - spec.y0)
    x = np.concatenate([xs, xs, np.full(count, spec.x0), np.full(count, spec.x1)])
    y = np.concatenate([np.full(count, spec.y0), np.full(count, spec.y1), ys, ys])
    return x, y


def _centered(fn: ScalarExpr, x, y, step: float) -> Tuple[np.ndarray, np.ndarray]:
    dx = (fn(x + step, y) - fn(x - step, y)) / (2 * step)
    dy = (fn(x, y + step) - fn(x, y - step)) / (2 * step)
    return np.broadcast_to(dx, np.shape(x)), np.broadcast_to(dy, np.shape(x))


def manufacture(spec: GridSpec,
                u_expr: ScalarExpr,
                w_expr: VectorExpr,
                a_expr: Optional[ScalarExpr] = None,
                *,
                use_bubble: bool = False,
                consistent: bool = True,
                grad_u_expr: Optional[VectorExpr] = None,
                h_expr: Optional[ScalarExpr] = None,
                w_potential: Optional[ScalarExpr] = None,
                name: str = "manufactured") -> ProblemSpec:
    """Build a problem with known minimizer ``u`` and direction field ``W``.

    Args:
        spec: the grid
        u_expr: closed-form ``u(x, y)``; multiplied by :func:`bubble` when
            ``use_bubble`` is set, otherwise it must vanish on the boundary
        w_expr: closed-form ``W(x, y)``, the intended ``grad u + F``
        a_expr: closed-form weight; defaults to ``|W|`` (so ``sigma = 1``)
        use_bubble: multiply ``u_expr`` by the boundary bubble
        consistent: build ``F`` and ``H`` with the grid operators; otherwise
            from the closed forms (``grad_u_expr``/``h_expr`` when given,
            else centred differences with step ``h/4``)
        grad_u_expr: closed-form gradient of ``u``
        h_expr: closed-form ``div J``
        w_potential: ``phi`` with ``grad phi = W``; when given ``F`` is
            conservative with potential ``phi - u``
        name: problem name

    Raises:
        PAreaErrorInvalidArgument: if ``W`` vanishes somewhere (a
            characteristic point), ``a`` is not positive, or ``u`` does not
            vanish on the boundary
    """
    if use_bubble:
        b = bubble(spec)

        def u_fn(x, y):
            return u_expr(x, y) * b(x, y)
    else:
        u_fn = u_expr

    bx, by = _boundary_points(spec)
    X, Y = spec.coordinates(Layout.NODE)
    U = np.broadcast_to(u_fn(X, Y), X.shape).astype(float)
    trace = float(np.max(np.abs(u_fn(bx, by))))
    if trace > 1e-12 * (1.0 + float(np.max(np.abs(U)))):
        raise PAreaErrorInvalidArgument(
            f"u does not vanish on the boundary (|u| up to {trace:.3e}); use use_bubble=True")
    exact_u = ScalarField(spec, U, Layout.NODE)

    XF, YF = spec.coordinates(Layout.FLUX)
    wx, wy = (np.broadcast_to(c, XF.shape) for c in w_expr(XF, YF))
    w_norm = np.hypot(wx, wy)
    if float(w_norm.min()) <= 0.0:
        raise PAreaErrorInvalidArgument("W vanishes on the grid: the data has a characteristic point")

    def a_fn(x, y):
        if a_expr is None:
            return np.hypot(*w_expr(x, y))
        return np.broadcast_to(a_expr(x, y), np.shape(x))

    a_values = np.broadcast_to(a_fn(XF, YF), XF.shape)
    if float(a_values.min()) <= 0.0:
        raise PAreaErrorInvalidArgument("the weight a must be positive")
    a = ScalarField(spec, a_values, Layout.FLUX)
    W = VectorField(spec, wx, wy)
    J = W * (a / W.magnitude())

    if consistent:
        F = W - gradient(exact_u)
        H = divergence(J)
    else:
        step = spec.h / 4
        if grad_u_expr is not None:
            gx, gy = grad_u_expr(XF, YF)
        else:
            gx, gy = _centered(u_fn, XF, YF, step)
        F = VectorField(spec, wx - gx, wy - gy)
        if h_expr is not None:
            H = ScalarField(spec, np.broadcast_to(h_expr(X, Y), X.shape), Layout.NODE)
        else:
            def jx(x, y):
                w = w_expr(x, y)
                return a_fn(x, y) * w[0] / np.hypot(*w)

            def jy(x, y):
                w = w_expr(x, y)
                return a_fn(x, y) * w[1] / np.hypot(*w)

            H = ScalarField(spec, _centered(jx, X, Y, step)[0] + _centered(jy, X, Y, step)[1], Layout.NODE)

    potential = None
    if w_potential is not None:
        potential = ScalarField(spec, np.broadcast_to(w_potential(X, Y), X.shape) - U, Layout.NODE)

    logger.debug("manufactured problem name=%s nx=%d ny=%d consistent=%s", name, spec.nx, spec.ny, consistent)
    return ProblemSpec(spec=spec, a=a, F=F, H=H, name=name, exact_u=exact_u,
                       exact_J=J, potential=potential)


def example_paper(spec: GridSpec, consistent: bool = True) -> ProblemSpec:
    """The reference problem on the unit square.

    ``u = xy(1-x)(1-y)``, ``W = grad u + F = (1, x+y)``,
    ``a = |W| = sqrt(1 + (x+y)^2)``, ``H = div(1, x+y) = 1`` and
    ``J = (1, x+y)``. ``F`` is not conservative (its curl is 1).

    Raises:
        PAreaErrorInvalidArgument: if the grid is not on ``(0, 1)^2``
    """
    if not spec.is_domain(0.0, 0.0, 1.0, 1.0):
        raise PAreaErrorInvalidArgument(f"the reference problem lives on the unit square, not {spec}")

    def u_expr(x, y):
        return x * y * (1 - x) * (1 - y)

    def grad_u_expr(x, y):
        return y * (1 - y) * (1 - 2 * x), x * (1 - x) * (1 - 2 * y)

    def w_expr(x, y):
        return np.ones_like(x), x + y

    problem = manufacture(spec, u_expr, w_expr, consistent=consistent,
                          grad_u_expr=grad_u_expr, h_expr=lambda x, y: np.ones_like(x),
                          name="example-4.1")
    return dataclasses.replace(problem, H=ScalarField.full(spec, 1.0, Layout.NODE))


def zero_problem(spec: GridSpec) -> ProblemSpec:
    """``a = 1``, ``F = 0``, ``H = 0``: the minimizer is ``u = 0`` and every node is characteristic."""
    return ProblemSpec(spec=spec,
                       a=ScalarField.full(spec, 1.0, Layout.FLUX),
                       F=VectorField.zeros(spec),
                       H=ScalarField.zeros(spec, Layout.NODE),
                       name="zero",
                       exact_u=ScalarField.zeros(spec, Layout.NODE),
                       potential=ScalarField.zeros(spec, Layout.NODE))


def radial_problem(spec: GridSpec) -> ProblemSpec:
    """``W = (x, y)`` with ``a = |W|`` on a domain away from the origin; ``H = 2``, ``J = (x, y)``."""
    return manufacture(spec, lambda x, y: np.ones_like(x), lambda x, y: (x, y),
                       use_bubble=True, w_potential=lambda x, y: (x * x + y * y) / 2,
                       name="radial")


def uniform_flow_problem(spec: GridSpec, theta: float = np.pi / 6) -> ProblemSpec:
    """Constant ``W = (cos theta, sin theta)``, ``a = 1``: ``H = 0`` and ``J = W``."""
    c, s = np.cos(theta), np.sin(theta)
    return manufacture(spec, lambda x, y: 16.0 * np.ones_like(x),
                       lambda x, y: (np.full_like(x, c), np.full_like(x, s)),
                       lambda x, y: np.ones_like(x),
                       use_bubble=True, w_potential=lambda x, y: c * x + s * y,
                       name="uniform-flow")


def validate_hypotheses(p: ProblemSpec, c_omega: float = C_OMEGA_UNIT_SQUARE,
                        c1: Optional[float] = None) -> HypothesisReport:
    """Report the data bounds and the smallness condition ``||H||_inf < m / C_Omega``.

    Args:
        p: the problem
        c_omega: Poincare-type constant of the domain, supplied by the caller
        c1: ``|E(u)|`` for the bound on ``||u||_1``; defaults to the energy of
            ``p.exact_u`` when the problem has one

    Returns:
        the report; it never raises for violated hypotheses, it flags them
    """
    if not c_omega > 0:
        raise PAreaErrorInvalidArgument("c_omega must be positive")
    h_sup = norms(p.H).linf
    threshold = p.m / c_omega
    holds = h_sup < threshold
    if c1 is None and p.exact_u is not None:
        from parea.bregman import energy
        c1 = abs(energy(p, p.exact_u))
    ceiling = None
    if holds and c1 is not None:
        ceiling = (c_omega * c1 + p.m * p.k1 * c_omega) / (p.m - c_omega * h_sup)
    curl_sup = norms(curl(p.F)).linf
    flags = ReportFlag.NONE
    if not holds:
        flags |= ReportFlag.HYPOTHESIS_VIOLATED
    if p.potential is None and curl_sup > 1e-8 * (1.0 + norms(p.F).linf):
        flags |= ReportFlag.NON_CONSERVATIVE
    return HypothesisReport(m=p.m, M=p.M, k1=p.k1, h_sup=h_sup, c_omega=c_omega,
                            threshold=threshold, smallness_holds=holds, l1_ceiling=ceiling,
                            curl_F_sup=curl_sup, flags=flags)


class ProblemFactory:
    """This ``ProblemFactory`` builds ``ProblemSpec`` objects
    in various ways. It ensures that every built-in problem gets a grid
    of the requested resolution on its own domain.

    Args:
        n: interior nodes per axis
    """

    NAMES = ("example-4.1", "zero", "radial", "uniform-flow")

    def __init__(self, n: int):
        self.n = n

    def example_paper(self, consistent: bool = True) -> ProblemSpec:
        return example_paper(GridSpec.unit_square(self.n), consistent)

    def zero(self) -> ProblemSpec:
        return zero_problem(GridSpec.unit_square(self.n))

    def radial(self) -> ProblemSpec:
        return radial_problem(GridSpec.square(self.n, 1.0, 2.0))

    def uniform_flow(self) -> ProblemSpec:
        return uniform_flow_problem(GridSpec.unit_square(self.n))

    def from_name(self, name: str) -> ProblemSpec:
        """Built-in problem by name, e.g. ``example-4.1``.

        Raises:
            PAreaErrorInvalidArgument: for an unknown name
        """
        builders = {
            "example-4.1": self.example_paper,
            "zero": self.zero,
            "radial": self.radial,
            "uniform-flow": self.uniform_flow,
        }
        try:
            builder = builders[name]
        except KeyError:
            raise PAreaErrorInvalidArgument(
                f"unknown problem {name!r}; choose from {', '.join(self.NAMES)}") from None
        return builder()

    @staticmethod
    def from_manifest(path) -> ProblemSpec:
        """Problem saved with :func:`parea.artifacts.save_problem`."""
        from parea.artifacts import load_problem
        return load_problem(path)
