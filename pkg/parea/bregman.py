"""Alternating split Bregman iteration for ``min  sum a|grad u + F| + H u``.

One sweep is

1. ``u <- Laplacian^-1 (H / lambda - div(b - d))``
2. ``d <- shrink(b + grad u, a, F, lambda)``
3. ``b <- b + grad u - d``

and the loop stops once the relative change ``||u_new - u|| / ||u_new||``
drops below ``tol``. When ``u_new`` vanishes the absolute change and the
increment ``||grad u - d||`` must both be below ``tol``.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from parea.constants import DEFAULT_HISTORY_STRIDE, DEFAULT_LAMBDA, DEFAULT_MAX_ITER, DEFAULT_TOL
from parea.enums import Layout
from parea.errors import Status, PAreaErrorDiverged, PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.grid import (ScalarField, VectorField, backward_differences, forward_differences,
                        gradient, inner_product)
from parea.poisson import solve_values
from parea.problems import ProblemSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the split Bregman loop.

    Args:
        lambda_: Bregman penalty, ``> 0``
        tol: relative-change stopping threshold in ``(0, 1)``
        max_iter: iteration cap, ``>= 1``
        history_stride: record every ``history_stride``-th iterate
    """
    lambda_: float = DEFAULT_LAMBDA
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    history_stride: int = DEFAULT_HISTORY_STRIDE

    def __post_init__(self):
        Status.check(self._validate(), f"invalid solver configuration {self}")

    def _validate(self) -> Status:
        if not (self.lambda_ > 0 and math.isfinite(self.lambda_)):
            return Status.ERROR_INVALID_ARGUMENT
        if not 0 < self.tol < 1:
            return Status.ERROR_INVALID_ARGUMENT
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            return Status.ERROR_INVALID_ARGUMENT
        if int(self.history_stride) != self.history_stride or self.history_stride < 1:
            return Status.ERROR_INVALID_ARGUMENT
        return Status.SUCCESS

    def as_dict(self) -> dict:
        return {"lambda": self.lambda_, "tol": self.tol,
                "max_iter": self.max_iter, "history_stride": self.history_stride}


@dataclass(frozen=True)
class SolveResult:
    u: ScalarField
    d: VectorField
    b: VectorField
    iterations: int
    converged: bool
    rel_change_history: Tuple[float, ...]
    energy_history: Tuple[float, ...]
    history_iterations: Tuple[int, ...]
    config: SolverConfig = field(repr=False)

    @property
    def final_rel_change(self) -> float:
        return self.rel_change_history[-1] if self.rel_change_history else math.nan

    @property
    def final_energy(self) -> float:
        return self.energy_history[-1] if self.energy_history else math.nan

    def summary(self) -> dict:
        return {"iterations": self.iterations, "converged": self.converged,
                "final_rel_change": self.final_rel_change, "final_energy": self.final_energy}


def _shrink_values(sx, sy, threshold, fx, fy):
    magnitude = np.hypot(sx, sy)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(magnitude > 0, np.maximum(magnitude - threshold, 0.0) / magnitude, 0.0)
    return scale * sx - fx, scale * sy - fy


def shrink(w: VectorField, a: ScalarField, F: VectorField, lambda_: float) -> VectorField:
    """Pointwise shrinkage ``max(|s| - a/lambda, 0) s/|s| - F`` with ``s = w + F``.

    Where ``s = 0`` the result is ``-F``.

    Raises:
        PAreaErrorInvalidArgument: if ``a`` is not positive everywhere or ``lambda_ <= 0``
    """
    if a.min() <= 0:
        raise PAreaErrorInvalidArgument("shrink threshold weight a must be positive")
    if not lambda_ > 0:
        raise PAreaErrorInvalidArgument("lambda must be positive")
    if a.layout is not Layout.FLUX:
        raise PAreaErrorStructureMismatch("the weight a lives on the FLUX lattice")
    s = w + F
    px, py = _shrink_values(s.px, s.py, a.values / lambda_, F.px, F.py)
    return VectorField(w.spec, px, py)


def _energy_values(a, fx, fy, hv, u, h) -> float:
    gx, gy = forward_differences(u, h)
    return float(h * h * (np.sum(a * np.hypot(gx + fx, gy + fy)) + np.sum(hv * u)))


def energy(problem: ProblemSpec, u: ScalarField) -> float:
    """``h^2 sum a|grad u + F|`` over the FLUX lattice plus ``h^2 sum H u`` over the nodes."""
    if u.spec != problem.spec or u.layout is not Layout.NODE:
        raise PAreaErrorStructureMismatch(f"u must be a NODE field on {problem.spec}")
    return (inner_product(problem.a, (gradient(u) + problem.F).magnitude())
            + inner_product(problem.H, u))


def _l2(values: np.ndarray, h: float) -> float:
    return h * float(np.sqrt(np.sum(np.square(values))))


class SplitBregman:
    """Split Bregman solver bound to one problem.

    The iteration works on the raw value arrays and only wraps them into
    fields for the returned :class:`SolveResult`.

    Args:
        problem: the data ``(a, F, H)``
        config: loop parameters
    """

    def __init__(self, problem: ProblemSpec, config: Optional[SolverConfig] = None):
        self.problem = problem
        self.config = config or SolverConfig()

    def _initial(self, init: Optional[Tuple[VectorField, VectorField]]):
        shape = self.problem.spec.shape(Layout.FLUX)
        if init is None:
            return np.zeros(shape), np.zeros(shape), np.zeros(shape), np.zeros(shape)
        d0, b0 = init
        for f in (d0, b0):
            if f.spec != self.problem.spec:
                raise PAreaErrorStructureMismatch(f"initial fields must live on {self.problem.spec}")
        return d0.px.copy(), d0.py.copy(), b0.px.copy(), b0.py.copy()

    def run(self, init: Optional[Tuple[VectorField, VectorField]] = None) -> SolveResult:
        """Iterate until the stopping rule holds or ``max_iter`` is reached.

        Args:
            init: optional ``(d0, b0)``; zero fields by default

        Returns:
            the final iterate and the recorded history. Running out of
            iterations is not an error; ``converged`` is false then.

        Raises:
            PAreaErrorDiverged: if an iterate stops being finite
        """
        p, cfg = self.problem, self.config
        spec = p.spec
        h, lam = spec.h, cfg.lambda_
        a = p.a.values
        fx, fy = p.F.px, p.F.py
        hv = p.H.values
        threshold = a / lam
        dx, dy, bx, by = self._initial(init)
        u = np.zeros(spec.shape(Layout.NODE))

        rel_history, energy_history, history_iterations = [], [], []
        converged = False
        rel_change = math.nan
        k = 0
        for k in range(1, cfg.max_iter + 1):
            u_new = solve_values(hv / lam - backward_differences(bx - dx, by - dy, h), spec)
            gx, gy = forward_differences(u_new, h)
            dx, dy = _shrink_values(bx + gx + fx, by + gy + fy, threshold, fx, fy)
            rx, ry = gx - dx, gy - dy
            bx = bx + rx
            by = by + ry
            if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(bx)) and np.all(np.isfinite(by))):
                logger.error("solve diverged problem=%s iteration=%d", p.name, k)
                raise PAreaErrorDiverged(k, f"non-finite iterate in problem {p.name}")

            change = _l2(u_new - u, h)
            size = _l2(u_new, h)
            u = u_new
            if size > 0:
                rel_change = change / size
                converged = rel_change < cfg.tol
            else:
                # u = 0 is only a fixed point once the multipliers stop moving
                rel_change = change
                converged = change < cfg.tol and _l2(np.hypot(rx, ry), h) < cfg.tol

            if k % cfg.history_stride == 0 or converged or k == cfg.max_iter:
                e = _energy_values(a, fx, fy, hv, u, h)
                rel_history.append(rel_change)
                energy_history.append(e)
                history_iterations.append(k)
                logger.debug("iteration k=%d rel_change=%.6e energy=%.12g", k, rel_change, e)
            if converged:
                break

        if converged:
            logger.info("solve done problem=%s iterations=%d rel_change=%.3e", p.name, k, rel_change)
        else:
            logger.warning("solve not converged problem=%s iterations=%d rel_change=%.3e tol=%.1e",
                           p.name, k, rel_change, cfg.tol)
        return SolveResult(u=ScalarField(spec, u, Layout.NODE),
                           d=VectorField(spec, dx, dy),
                           b=VectorField(spec, bx, by),
                           iterations=k,
                           converged=converged,
                           rel_change_history=tuple(rel_history),
                           energy_history=tuple(energy_history),
                           history_iterations=tuple(history_iterations),
                           config=cfg)


def solve(problem: ProblemSpec, config: Optional[SolverConfig] = None,
          init: Optional[Tuple[VectorField, VectorField]] = None) -> SolveResult:
    """Run :class:`SplitBregman` on ``problem``; see :meth:`SplitBregman.run`."""
    return SplitBregman(problem, config).run(init)


def convergence_rate(result: SolveResult, tail: int = 50) -> float:
    """Geometric contraction factor of the relative change over the last ``tail`` records.

    Fits ``log(rel_change) = c + k log(rate)`` by least squares.

    Returns:
        the fitted ``rate``; ``nan`` with fewer than two usable records
    """
    if tail < 2:
        raise PAreaErrorInvalidArgument("tail must be at least 2")
    ks = np.asarray(result.history_iterations[-tail:], dtype=float)
    values = np.asarray(result.rel_change_history[-tail:], dtype=float)
    usable = values > 0
    if np.count_nonzero(usable) < 2:
        return math.nan
    slope, _ = np.polyfit(ks[usable], np.log(values[usable]), 1)
    return float(np.exp(slope))


def history_rows(result: SolveResult) -> Sequence[Tuple[int, float, float]]:
    """``(iteration, rel_change, energy)`` triples, as written to history CSVs."""
    return list(zip(result.history_iterations, result.rel_change_history, result.energy_history))
