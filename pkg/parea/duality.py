"""Dual vector field ``J``, the factor ``sigma`` and the zero-gap checks.

Away from the characteristic set ``{grad u + F = 0}`` every minimizer gives
``J = a (grad u + F) / |grad u + F|`` and ``sigma = a / |grad u + F|``; ``J``
satisfies ``div J = H`` and ``|J| <= a``, and ``E(u) = <F, J>``.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from parea.bregman import energy
from parea.constants import EPS_CHAR
from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.grid import ScalarField, VectorField, divergence, gradient, inner_product, norms
from parea.problems import ProblemSpec
from parea.structs import EulerLagrangeResidual, FeasibilityResiduals

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DualFields:
    """``J`` and ``sigma`` on the FLUX lattice with the characteristic mask.

    Attributes:
        J: dual vector field, zero on the mask
        sigma: ``a / |grad u + F|`` off the mask, zero on it
        characteristic_mask: FLUX-shaped booleans, true where
            ``|grad u + F| < eps_char``
        u: the primal field the duals were extracted from, if known
        eps_char: the threshold used for the mask
    """
    J: VectorField
    sigma: ScalarField
    characteristic_mask: np.ndarray
    u: Optional[ScalarField] = None
    eps_char: float = 0.0

    @property
    def off_mask(self) -> np.ndarray:
        return ~self.characteristic_mask

    @property
    def mask_fraction(self) -> float:
        return float(np.mean(self.characteristic_mask))


def default_eps_char(problem: ProblemSpec) -> float:
    return EPS_CHAR * problem.m


def extract(problem: ProblemSpec, u: ScalarField, eps_char: Optional[float] = None) -> DualFields:
    """Primal extraction of ``J`` and ``sigma`` from a solution ``u``.

    Args:
        problem: the data the solution belongs to
        u: NODE field on ``problem.spec``
        eps_char: characteristic threshold on ``|grad u + F|``; defaults to
            ``1e-8 * m``

    Raises:
        PAreaErrorInvalidArgument: if ``eps_char <= 0``
    """
    if u.spec != problem.spec:
        raise PAreaErrorStructureMismatch(f"u lives on {u.spec}, the problem on {problem.spec}")
    if eps_char is None:
        eps_char = default_eps_char(problem)
    if not eps_char > 0:
        raise PAreaErrorInvalidArgument("eps_char must be positive")

    s = gradient(u) + problem.F
    magnitude = np.hypot(s.px, s.py)
    mask = magnitude < eps_char
    safe = np.where(mask, 1.0, magnitude)
    a = problem.a.values
    sigma = np.where(mask, 0.0, a / safe)
    J = VectorField(problem.spec, sigma * s.px, sigma * s.py)
    mask.setflags(write=False)
    if mask.any():
        logger.debug("characteristic nodes count=%d eps_char=%.3e", int(mask.sum()), eps_char)
    return DualFields(J=J, sigma=ScalarField(problem.spec, sigma, Layout.FLUX),
                      characteristic_mask=mask, u=u, eps_char=eps_char)


def extract_from_bregman(problem: ProblemSpec, result, eps_char: Optional[float] = None) -> DualFields:
    """Dual estimate ``J = lambda b`` from the Bregman multiplier of a finished solve.

    At a fixed point ``lambda b`` is ``a`` times a subgradient of ``|d + F|``
    and has divergence ``H``, so it is defined on characteristic nodes as
    well. ``sigma`` and the mask are those of the primal extraction from
    ``result.u``.
    """
    primal = extract(problem, result.u, eps_char)
    J = result.b * result.config.lambda_
    return DualFields(J=J, sigma=primal.sigma, characteristic_mask=primal.characteristic_mask,
                      u=result.u, eps_char=primal.eps_char)


def _node_exclusion(flux_mask: np.ndarray) -> np.ndarray:
    """NODE cells whose divergence stencil reads a masked FLUX point."""
    return flux_mask[1:, 1:] | flux_mask[:-1, 1:] | flux_mask[1:, :-1]


def feasibility_residuals(problem: ProblemSpec, dual: DualFields) -> FeasibilityResiduals:
    """Dual feasibility and the duality gap.

    ``div_residual_l1`` is ``||div J - H||_1`` over nodes whose stencil avoids
    the mask, ``magnitude_violation_linf`` is ``max(|J| - a, 0)`` and ``gap``
    is ``E(u) - <F, J>``.

    Raises:
        PAreaErrorInvalidArgument: if ``dual`` carries no primal field
    """
    if dual.u is None:
        raise PAreaErrorInvalidArgument("the duality gap needs the primal field u")
    residual = divergence(dual.J) - problem.H
    div_l1 = norms(residual, where=~_node_exclusion(dual.characteristic_mask)).l1
    violation = np.maximum(dual.J.magnitude().values - problem.a.values, 0.0)
    e = energy(problem, dual.u)
    dual_value = inner_product(problem.F, dual.J)
    result = FeasibilityResiduals(div_residual_l1=div_l1,
                                  magnitude_violation_linf=float(violation.max()),
                                  gap=e - dual_value, energy=e, dual_value=dual_value)
    logger.debug("feasibility problem=%s %s", problem.name, result)
    return result


def euler_lagrange_residual(problem: ProblemSpec, result, threshold: float = 1e-8) -> EulerLagrangeResidual:
    """Residual of ``div(a (d + F) / |d + F|) = H`` at a finished solve.

    Nodes whose stencil reads a point with ``|d + F| < threshold`` are
    excluded. ``split_residual_linf`` is ``||grad u - d||_inf``, the last
    increment of the Bregman variable.
    """
    s = result.d + problem.F
    magnitude = np.hypot(s.px, s.py)
    mask = magnitude < threshold
    scale = np.where(mask, 0.0, problem.a.values / np.where(mask, 1.0, magnitude))
    normalised = VectorField(problem.spec, scale * s.px, scale * s.py)
    excluded = _node_exclusion(mask)
    residual = divergence(normalised) - problem.H
    split = gradient(result.u) - result.d
    return EulerLagrangeResidual(residual_l1=norms(residual, where=~excluded).l1,
                                 split_residual_linf=norms(split).linf,
                                 excluded_fraction=float(np.mean(excluded)))
