"""Dirichlet Poisson solves ``Laplacian(u) = f`` on the NODE lattice.

``Laplacian`` is ``grid.divergence(grid.gradient(.))``, the 5-point stencil
with zero boundary values. The discrete sine transform (type I) diagonalises
it exactly, so :func:`solve_fast` needs no inner tolerance. Note the sign:
the operator is negative definite, so ``f = 1`` gives a negative ``u``.
"""
import logging
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.fft import dstn, idstn

from parea.constants import DENSE_ORACLE_MAX_NODES
from parea.enums import Layout
from parea.errors import PAreaErrorSizeLimit, PAreaErrorStructureMismatch
from parea.grid import GridSpec, ScalarField

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def laplacian_eigenvalues(spec: GridSpec) -> np.ndarray:
    """Eigenvalues of the 5-point Dirichlet Laplacian in the sine basis.

    Cached per grid; the returned array is read-only and safe to share.
    """
    h = spec.h
    kx = np.arange(1, spec.nx + 1)
    ky = np.arange(1, spec.ny + 1)
    sx = np.sin(np.pi * kx / (2 * (spec.nx + 1))) ** 2
    sy = np.sin(np.pi * ky / (2 * (spec.ny + 1))) ** 2
    eigenvalues = -(4.0 / h ** 2) * (sx[:, None] + sy[None, :])
    eigenvalues.setflags(write=False)
    logger.debug("eigen table built nx=%d ny=%d", spec.nx, spec.ny)
    return eigenvalues


def solve_values(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Array-level fast solve, for callers that iterate on raw arrays."""
    coefficients = dstn(values, type=1, norm="ortho")
    coefficients /= laplacian_eigenvalues(spec)
    return idstn(coefficients, type=1, norm="ortho")


def _check_node(f: ScalarField) -> None:
    if f.layout is not Layout.NODE:
        raise PAreaErrorStructureMismatch("Poisson right-hand sides live on the NODE lattice")


def solve_fast(f: ScalarField) -> ScalarField:
    """Solve ``Laplacian(u) = f`` with ``u = 0`` on the boundary.

    Args:
        f: right-hand side on the NODE lattice

    Returns:
        the zero-Dirichlet solution ``u``; deterministic for a given ``f``
    """
    _check_node(f)
    return ScalarField(f.spec, solve_values(f.values, f.spec), Layout.NODE)


def dense_laplacian(spec: GridSpec) -> np.ndarray:
    """The 5-point Dirichlet Laplacian as a dense matrix, row-major node order."""
    def second_difference(n):
        return scipy.sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n))

    tx = second_difference(spec.nx)
    ty = second_difference(spec.ny)
    matrix = scipy.sparse.kron(tx, scipy.sparse.identity(spec.ny)) \
        + scipy.sparse.kron(scipy.sparse.identity(spec.nx), ty)
    return matrix.toarray() / spec.h ** 2


def solve_dense_oracle(f: ScalarField) -> ScalarField:
    """Slow reference solve by dense direct factorisation.

    Raises:
        PAreaErrorSizeLimit: for more than ``DENSE_ORACLE_MAX_NODES`` unknowns
    """
    _check_node(f)
    spec = f.spec
    if spec.nx * spec.ny > DENSE_ORACLE_MAX_NODES:
        raise PAreaErrorSizeLimit(
            f"{spec.nx}x{spec.ny} grid exceeds {DENSE_ORACLE_MAX_NODES} dense unknowns")
    # the negated operator is symmetric positive definite
    solution = scipy.linalg.solve(-dense_laplacian(spec), -f.values.ravel(), assume_a="pos")
    return ScalarField(spec, solution.reshape(spec.nx, spec.ny), Layout.NODE)
