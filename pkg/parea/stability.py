"""Perturbation experiments on the curvature ``H`` and the stability inequalities.

A sweep perturbs ``H`` by scaled Gaussian noise for every ``(delta, seed)``
pair, solves each perturbed problem, and compares the solution, its dual
field and its energy against a reference solution of the unperturbed
problem. Exponents of the observed decay are fitted on log-log scales.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from parea.bregman import SolverConfig, energy, history_rows, solve
from parea.constants import C_OMEGA_UNIT_SQUARE, DEFAULT_TOL
from parea.duality import DualFields, extract
from parea.enums import Layout, NormKind, ReferenceMode
from parea.errors import (Status, PAreaErrorDiagnostic, PAreaErrorDiverged, PAreaErrorInvalidArgument,
                          PAreaErrorStructureMismatch)
from parea.flags import ReportFlag
from parea.grid import ScalarField, VectorField, gradient, norms
from parea.problems import ProblemSpec, validate_hypotheses
from parea.structs import (EnergyStability, ExponentFit, GFieldDiagnostics, JAlignment, StabilityReport,
                           StabilityRow)

logger = logging.getLogger(__name__)

FIT_METRICS = {
    "J_vs_eps": "J_l1_diff",
    "u_vs_eps": "u_l1_diff",
    "grad_vs_eps": "grad_l1_diff",
    "sigma_vs_eps": "sigma_l1_diff",
}


@dataclass(frozen=True)
class NoiseModel:
    """``H~ = H + gamma R`` with ``R`` standard normal and ``gamma = delta ||H|| / ||R||``.

    Args:
        delta: relative noise level, ``>= 0``
        seed: seed of the ``numpy`` generator drawing ``R``
        norm_kind: norm used in ``gamma``
    """
    delta: float
    seed: int = 0
    norm_kind: NormKind = NormKind.L2_GRID

    def __post_init__(self):
        valid = (self.delta >= 0 and math.isfinite(self.delta)
                 and int(self.seed) == self.seed and self.norm_kind in NormKind)
        Status.check(Status.SUCCESS if valid else Status.ERROR_INVALID_ARGUMENT,
                     f"invalid noise model {self}")


class Perturbation(NamedTuple):
    H: ScalarField
    gamma: float
    flags: ReportFlag


def draw_perturbation(H: ScalarField, model: NoiseModel) -> Perturbation:
    """Perturbed curvature together with the scaling and any flag raised."""
    if model.delta == 0:
        return Perturbation(H, 0.0, ReportFlag.NONE)
    rng = np.random.default_rng(model.seed)
    R = rng.standard_normal(H.values.shape)
    while not np.any(R):
        R = rng.standard_normal(H.values.shape)
    h_norm = float(np.linalg.norm(H.values))
    if h_norm == 0:
        logger.warning("degenerate noise scaling delta=%g seed=%d: H is zero", model.delta, model.seed)
        return Perturbation(H, 0.0, ReportFlag.DEGENERATE_SCALING)
    gamma = model.delta * h_norm / float(np.linalg.norm(R))
    return Perturbation(H.with_values(H.values + gamma * R), gamma, ReportFlag.NONE)


def perturb(H: ScalarField, model: NoiseModel) -> ScalarField:
    """Draw ``H~``; deterministic in ``model.seed`` and exact ``H`` for ``delta = 0``."""
    return draw_perturbation(H, model).H


def _same_data(p: ProblemSpec, q: ProblemSpec) -> bool:
    return (p.spec == q.spec
            and np.array_equal(p.a.values, q.a.values)
            and np.array_equal(p.F.px, q.F.px)
            and np.array_equal(p.F.py, q.F.py))


def check_energy_stability(p: ProblemSpec, p_tilde: ProblemSpec, u: ScalarField, u_tilde: ScalarField,
                           tol: float = DEFAULT_TOL) -> EnergyStability:
    """``|E(u) - E~(u~)| <= max(||u||_1, ||u~||_1) ||H - H~||_inf`` up to a solver slack.

    Raises:
        PAreaErrorInvalidArgument: if the problems differ in ``a`` or ``F``
    """
    if not _same_data(p, p_tilde):
        raise PAreaErrorInvalidArgument("energy stability compares problems sharing a and F")
    e = energy(p, u)
    e_tilde = energy(p_tilde, u_tilde)
    lhs = abs(e - e_tilde)
    rhs = max(norms(u).l1, norms(u_tilde).l1) * norms(p.H - p_tilde.H).linf
    slack = 10 * (p.spec.h + tol) * (1 + abs(e))
    return EnergyStability(lhs=lhs, rhs=rhs, slack=slack, holds=lhs <= rhs + slack)


def _union_off_mask(dual: DualFields, dual_tilde: DualFields) -> np.ndarray:
    if dual.J.spec != dual_tilde.J.spec:
        raise PAreaErrorStructureMismatch(f"grids differ: {dual.J.spec} vs {dual_tilde.J.spec}")
    return ~(dual.characteristic_mask | dual_tilde.characteristic_mask)


def check_J_alignment(dual: DualFields, dual_tilde: DualFields, a: ScalarField) -> JAlignment:
    """Alignment of two dual fields off the union of their characteristic masks.

    ``alignment_integral = h^2 sum(|J||J~| - J.J~)``, ``j_diff_l1 = ||J - J~||_1``
    and the Cauchy-Schwarz chain ``||J - J~||_1 <= sqrt(2|Omega|) sqrt(alignment_integral)``.
    Where both magnitudes equal ``a`` the identity
    ``|J - J~|^2 = 2a^2 - 2 J.J~`` is checked pointwise.
    """
    off = _union_off_mask(dual, dual_tilde)
    J, Jt = dual.J, dual_tilde.J
    spec = J.spec
    h2 = spec.h ** 2
    dot = (J.px * Jt.px + J.py * Jt.py)[off]
    mag = np.hypot(J.px, J.py)[off]
    mag_t = np.hypot(Jt.px, Jt.py)[off]
    a_off = a.values[off]
    diff = np.hypot(J.px - Jt.px, J.py - Jt.py)[off]
    if not off.any():
        return JAlignment(alignment_integral=0.0, j_diff_l1=0.0, chain_rhs=0.0, chain_holds=True,
                          min_pointwise=0.0, identity_residual=0.0, identity_holds=True)

    pointwise = mag * mag_t - dot
    alignment = float(h2 * pointwise.sum())
    j_diff = float(h2 * diff.sum())
    chain_rhs = math.sqrt(2 * spec.quadrature_area(Layout.FLUX)) * math.sqrt(max(alignment, 0.0))
    identity = float(np.max(np.abs(diff ** 2 - (2 * a_off ** 2 - 2 * dot))))
    return JAlignment(alignment_integral=alignment, j_diff_l1=j_diff, chain_rhs=chain_rhs,
                      chain_holds=j_diff <= chain_rhs + 1e-8,
                      min_pointwise=float(np.min(pointwise / a_off ** 2)),
                      identity_residual=identity, identity_holds=identity <= 1e-8)


def _centered_gradient_l1(values: np.ndarray, valid: np.ndarray, h: float) -> float:
    """``h^2 sum |grad|`` over points whose four neighbours and self are valid."""
    inner = np.zeros_like(valid)
    inner[1:-1, 1:-1] = (valid[1:-1, 1:-1] & valid[2:, 1:-1] & valid[:-2, 1:-1]
                         & valid[1:-1, 2:] & valid[1:-1, :-2])
    gx = np.zeros_like(values)
    gy = np.zeros_like(values)
    gx[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * h)
    gy[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
    return float(h * h * np.hypot(gx, gy)[inner].sum())


def g_field_diagnostics(dual: DualFields, dual_tilde: DualFields,
                        sigma_tilde: Optional[ScalarField] = None) -> GFieldDiagnostics:
    """``G = (J~ - J) / sigma~`` off the masks and the L1 norm of its gradient.

    Args:
        dual: duals of the reference solution
        dual_tilde: duals of the perturbed solution
        sigma_tilde: defaults to ``dual_tilde.sigma``

    Raises:
        PAreaErrorDiagnostic: if no point is off both masks
    """
    if sigma_tilde is None:
        sigma_tilde = dual_tilde.sigma
    off = _union_off_mask(dual, dual_tilde) & (sigma_tilde.values > 0)
    if not off.any():
        raise PAreaErrorDiagnostic("G is undefined: no point off the characteristic masks")
    spec = dual.J.spec
    safe = np.where(off, sigma_tilde.values, 1.0)
    gx = np.where(off, (dual_tilde.J.px - dual.J.px) / safe, 0.0)
    gy = np.where(off, (dual_tilde.J.py - dual.J.py) / safe, 0.0)
    grad_l1 = _centered_gradient_l1(gx, off, spec.h) + _centered_gradient_l1(gy, off, spec.h)
    j_diff = norms(dual_tilde.J - dual.J, where=off).l1
    ratio = grad_l1 / math.sqrt(j_diff) if j_diff > 0 else None
    return GFieldDiagnostics(G=VectorField(spec, gx, gy), grad_G_l1=grad_l1, j_diff_l1=j_diff, ratio=ratio)


class Reference(NamedTuple):
    """Solution every sweep row is compared against."""
    u: ScalarField
    dual: DualFields
    energy: float
    mode: ReferenceMode


def reference_solution(base: ProblemSpec, config: SolverConfig, mode: ReferenceMode = ReferenceMode.EXACT,
                       eps_char: Optional[float] = None) -> Reference:
    """Exact solution of ``base`` when requested and known, otherwise a zero-noise solve."""
    if mode is ReferenceMode.EXACT and base.exact_u is None:
        logger.warning("no exact solution problem=%s: using a zero-noise solve", base.name)
        mode = ReferenceMode.ZERO_NOISE
    if mode is ReferenceMode.EXACT:
        u = base.exact_u
    else:
        result = solve(base, config)
        if not result.converged:
            raise PAreaErrorDiagnostic(f"zero-noise reference solve of {base.name} did not converge")
        u = result.u
    return Reference(u=u, dual=extract(base, u, eps_char), energy=energy(base, u), mode=mode)


def _nan_row(delta: float, seed: int, eps: float, iterations: int, flags: ReportFlag) -> StabilityRow:
    nan = math.nan
    return StabilityRow(delta=delta, seed=seed, eps=eps, rel_l2_err=nan, max_err=nan, u_l1_diff=nan,
                        J_l1_diff=nan, grad_l1_diff=nan, sigma_l1_diff=nan, energy_diff=nan,
                        energy_bound_lhs=nan, energy_bound_rhs=nan, energy_bound_holds=False,
                        alignment_integral=nan, alignment_bound=nan, alignment_bound_holds=False,
                        j_chain_rhs=nan, j_chain_holds=False, l1_ceiling_holds=None, min_alignment=nan,
                        grad_G_l1=nan, g_ratio=None, iterations=iterations, converged=False,
                        flags=flags | ReportFlag.NOT_CONVERGED)


def run_row(base: ProblemSpec, reference: Reference, delta: float, seed: int, config: SolverConfig,
            eps_char: Optional[float] = None, c_omega: float = C_OMEGA_UNIT_SQUARE) -> StabilityRow:
    """Perturb, solve and measure one ``(delta, seed)`` pair."""
    return _measure(base, reference, delta, seed, config, eps_char, c_omega)[0]


def _measure(base, reference, delta, seed, config, eps_char, c_omega) -> Tuple[StabilityRow, np.ndarray]:
    perturbation = draw_perturbation(base.H, NoiseModel(delta, seed))
    flags = perturbation.flags
    p_tilde = base.with_H(perturbation.H, name=f"{base.name}~{delta:g}/{seed}")
    eps = norms(base.H - p_tilde.H).linf
    try:
        result = solve(p_tilde, config)
    except PAreaErrorDiverged as e:
        logger.warning("row diverged delta=%g seed=%d iteration=%d", delta, seed, e.iteration)
        return _nan_row(delta, seed, eps, e.iteration, flags), np.empty((0, 3))
    if not result.converged:
        flags |= ReportFlag.NOT_CONVERGED

    u, u_tilde = reference.u, result.u
    dual, dual_tilde = reference.dual, extract(p_tilde, u_tilde, eps_char)
    off = _union_off_mask(dual, dual_tilde)
    ref_l2 = norms(u).l2
    err = u_tilde - u
    err_norms = norms(err)

    bound = check_energy_stability(base, p_tilde, u, u_tilde, config.tol)
    alignment = check_J_alignment(dual, dual_tilde, base.a)
    sigma1 = float(dual.sigma.values[dual.off_mask].max()) if dual.off_mask.any() else 0.0
    u_l1, u_tilde_l1 = norms(u).l1, norms(u_tilde).l1
    alignment_bound = sigma1 * (max(u_l1, u_tilde_l1) + u_l1) * eps
    alignment_holds = alignment.alignment_integral <= alignment_bound + sigma1 * bound.slack

    ceiling = validate_hypotheses(p_tilde, c_omega, c1=abs(energy(p_tilde, u_tilde))).l1_ceiling
    try:
        g = g_field_diagnostics(dual, dual_tilde)
        grad_G_l1, g_ratio = g.grad_G_l1, g.ratio
    except PAreaErrorDiagnostic:
        grad_G_l1, g_ratio = math.nan, None

    row = StabilityRow(
        delta=delta, seed=seed, eps=eps,
        rel_l2_err=err_norms.l2 / ref_l2 if ref_l2 > 0 else err_norms.l2,
        max_err=err_norms.linf,
        u_l1_diff=err_norms.l1,
        J_l1_diff=alignment.j_diff_l1,
        grad_l1_diff=norms(gradient(u_tilde) - gradient(u)).l1,
        sigma_l1_diff=norms(dual_tilde.sigma - dual.sigma, where=off).l1,
        energy_diff=bound.lhs,
        energy_bound_lhs=bound.lhs, energy_bound_rhs=bound.rhs, energy_bound_holds=bound.holds,
        alignment_integral=alignment.alignment_integral, alignment_bound=alignment_bound,
        alignment_bound_holds=alignment_holds,
        j_chain_rhs=alignment.chain_rhs, j_chain_holds=alignment.chain_holds,
        l1_ceiling_holds=None if ceiling is None else u_tilde_l1 <= ceiling,
        min_alignment=alignment.min_pointwise,
        grad_G_l1=grad_G_l1, g_ratio=g_ratio,
        iterations=result.iterations, converged=result.converged, flags=flags)
    history = np.array(history_rows(result), dtype=float).reshape(-1, 3)
    return row, history


def _row_job(args) -> Tuple[StabilityRow, np.ndarray]:
    return _measure(*args)


def fit_exponents(rows: Sequence[StabilityRow], metrics: Optional[dict] = None) -> Tuple[ExponentFit, ...]:
    """Least-squares slopes of ``log(metric)`` against ``log(eps)`` on per-delta medians.

    Only converged rows with ``eps > 0`` take part, and a fit needs three
    distinct deltas. With exactly three points the range is the smallest and
    largest pairwise slope, otherwise ``slope +- 2 stderr``.
    """
    metrics = FIT_METRICS if metrics is None else metrics
    usable = [r for r in rows if r.fittable]
    deltas = sorted({r.delta for r in usable})
    fits = []
    for name, attribute in metrics.items():
        xs, ys = [], []
        for delta in deltas:
            group = [r for r in usable if r.delta == delta]
            eps = float(np.median([r.eps for r in group]))
            value = float(np.median([getattr(r, attribute) for r in group]))
            if eps > 0 and value > 0 and math.isfinite(value):
                xs.append(math.log(eps))
                ys.append(math.log(value))
        if len(xs) < 3:
            logger.info("exponent fit skipped metric=%s points=%d", name, len(xs))
            continue
        fit = stats.linregress(xs, ys)
        if len(xs) == 3:
            pairwise = [(ys[j] - ys[i]) / (xs[j] - xs[i]) for i in range(3) for j in range(i + 1, 3)]
            low, high = min(pairwise), max(pairwise)
        else:
            low, high = fit.slope - 2 * fit.stderr, fit.slope + 2 * fit.stderr
        fits.append(ExponentFit(metric=name, slope=float(fit.slope), intercept=float(fit.intercept),
                                low=float(low), high=float(high), n_points=len(xs)))
    return tuple(fits)


def run_sweep(base: ProblemSpec, deltas: Iterable[float], seeds: Iterable[int],
              config: Optional[SolverConfig] = None,
              reference: ReferenceMode = ReferenceMode.EXACT,
              jobs: int = 1,
              eps_char: Optional[float] = None,
              c_omega: float = C_OMEGA_UNIT_SQUARE,
              keep_histories: bool = False) -> StabilityReport:
    """Solve ``base`` with perturbed curvature for every ``(delta, seed)``.

    Args:
        base: unperturbed problem
        deltas: noise levels, ``>= 0``
        seeds: generator seeds
        config: solver parameters shared by every row
        reference: what the rows are compared against
        jobs: worker processes; rows come back in ``(delta, seed)`` order
            whatever the value
        eps_char: characteristic threshold for the dual extraction
        c_omega: Poincare-type constant for the ``||u||_1`` ceiling
        keep_histories: attach the convergence history of every row

    Returns:
        every row and the fitted exponents. Rows whose solve diverges or
        stops at ``max_iter`` are flagged and kept out of the fits.
    """
    config = config or SolverConfig()
    deltas = sorted(float(d) for d in set(deltas))
    seeds = sorted(int(s) for s in set(seeds))
    if not deltas or not seeds:
        raise PAreaErrorInvalidArgument("a sweep needs at least one delta and one seed")
    if jobs < 1:
        raise PAreaErrorInvalidArgument("jobs must be at least 1")
    ref = reference_solution(base, config, reference, eps_char)
    work = [(base, ref, delta, seed, config, eps_char, c_omega) for delta in deltas for seed in seeds]
    logger.info("sweep start problem=%s rows=%d jobs=%d reference=%s",
                base.name, len(work), jobs, ref.mode.name)

    if jobs == 1:
        measured = [_row_job(args) for args in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            measured = list(executor.map(_row_job, work))
    measured.sort(key=lambda m: (m[0].delta, m[0].seed))
    rows = [row for row, _ in measured]

    skipped = sum(1 for r in rows if not r.converged)
    if skipped:
        logger.warning("sweep rows not converged count=%d", skipped)
    histories = tuple(history for _, history in measured) if keep_histories else ()
    report = StabilityReport(rows=tuple(rows), fits=fit_exponents(rows), problem=base.name,
                             reference=ref.mode.name, histories=histories)
    logger.info("sweep done problem=%s fits=%d", base.name, len(report.fits))
    return report
