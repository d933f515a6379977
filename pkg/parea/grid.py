"""Uniform rectangular grids, sampled fields and the discrete operators.

Two lattices share one :class:`GridSpec`:

* ``Layout.NODE``: the ``nx`` by ``ny`` interior nodes ``x0 + (i+1) h``.
  Fields here carry an implicit zero value on the boundary.
* ``Layout.FLUX``: the ``nx+1`` by ``ny+1`` points ``x0 + k h``, ``k = 0..nx``.
  Forward differences of NODE fields live here, as do the data fields that
  enter the pointwise shrinkage (``a``, ``F``, ``J``, ``sigma``).

FLUX index ``(i+1, j+1)`` is interior node ``(i, j)``. The pairing makes
:func:`divergence` the exact negative adjoint of :func:`gradient`, and
``divergence(gradient(u))`` the 5-point Dirichlet Laplacian.
"""
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple, Union

import numpy as np

from parea.constants import GRID_TOLERANCE
from parea.enums import Layout
from parea.errors import Status, PAreaErrorStructureMismatch


class Norms(NamedTuple):
    l1: float
    l2: float
    linf: float


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[x0, x1] x [y0, y1]`` with square cells.

    Args:
        nx: interior node count along x
        ny: interior node count along y
        x0, y0, x1, y1: domain corners

    Raises:
        PAreaErrorInvalidArgument: for an empty domain, non-positive node
            counts or cells that are not square
    """
    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def __post_init__(self):
        Status.check(self._validate(), f"invalid grid {self}")

    def _validate(self) -> Status:
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            return Status.ERROR_INVALID_ARGUMENT
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            return Status.ERROR_INVALID_ARGUMENT
        hx = (self.x1 - self.x0) / (self.nx + 1)
        hy = (self.y1 - self.y0) / (self.ny + 1)
        if abs(hx - hy) > GRID_TOLERANCE * max(hx, hy):
            return Status.ERROR_INVALID_ARGUMENT
        return Status.SUCCESS

    @classmethod
    def unit_square(cls, n: int) -> "GridSpec":
        """``n`` by ``n`` interior nodes on ``(0, 1)^2``; ``h = 1/(n+1)``."""
        return cls(n, n)

    @classmethod
    def square(cls, n: int, lo: float, hi: float) -> "GridSpec":
        return cls(n, n, lo, lo, hi, hi)

    @property
    def h(self) -> float:
        return (self.x1 - self.x0) / (self.nx + 1)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def shape(self, layout: Layout = Layout.NODE) -> Tuple[int, int]:
        if layout is Layout.NODE:
            return self.nx, self.ny
        return self.nx + 1, self.ny + 1

    def quadrature_area(self, layout: Layout = Layout.FLUX) -> float:
        """Area the ``h**2``-weighted sum over a lattice integrates to."""
        nx, ny = self.shape(layout)
        return self.h ** 2 * nx * ny

    def axes(self, layout: Layout = Layout.NODE) -> Tuple[np.ndarray, np.ndarray]:
        h = self.h
        if layout is Layout.NODE:
            kx, ky = np.arange(1, self.nx + 1), np.arange(1, self.ny + 1)
        else:
            kx, ky = np.arange(0, self.nx + 1), np.arange(0, self.ny + 1)
        return self.x0 + kx * h, self.y0 + ky * h

    def coordinates(self, layout: Layout = Layout.NODE) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` indexed ``[i, j]`` like the field values."""
        x, y = self.axes(layout)
        return np.meshgrid(x, y, indexing="ij")

    def is_domain(self, x0: float, y0: float, x1: float, y1: float, tol: float = 1e-12) -> bool:
        return all(math.isclose(a, b, abs_tol=tol) for a, b in
                   ((self.x0, x0), (self.y0, y0), (self.x1, x1), (self.y1, y1)))

    def as_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny,
                "x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _check_finite(*arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            Status.check(Status.ERROR_INVALID_ARGUMENT, "field values must be finite")


class ScalarField:
    """Grid-sampled real function.

    Values are copied on construction and read-only afterwards, so fields can
    be shared between threads and processes.

    Args:
        spec: the grid
        values: array of shape ``spec.shape(layout)``
        layout: lattice the values are sampled on
    """

    def __init__(self, spec: GridSpec, values, layout: Layout = Layout.NODE):
        self.spec = spec
        self.layout = layout
        self.values = _frozen(values)
        if self.values.shape != spec.shape(layout):
            raise PAreaErrorStructureMismatch(
                f"values of shape {self.values.shape} on {layout.name} lattice "
                f"of shape {spec.shape(layout)}")
        _check_finite(self.values)

    @classmethod
    def zeros(cls, spec: GridSpec, layout: Layout = Layout.NODE) -> "ScalarField":
        return cls(spec, np.zeros(spec.shape(layout)), layout)

    @classmethod
    def full(cls, spec: GridSpec, value: float, layout: Layout = Layout.NODE) -> "ScalarField":
        return cls(spec, np.full(spec.shape(layout), float(value)), layout)

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable, layout: Layout = Layout.NODE) -> "ScalarField":
        """Sample ``fn(X, Y)`` pointwise on the lattice."""
        X, Y = spec.coordinates(layout)
        return cls(spec, np.broadcast_to(fn(X, Y), X.shape), layout)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.spec, values, self.layout)

    def _operand(self, other):
        if isinstance(other, ScalarField):
            _check_compatible(self, other)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._operand(other))

    def __rsub__(self, other):
        return self.with_values(self._operand(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            return other * self
        return self.with_values(self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._operand(other))

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        return f"ScalarField({self.layout.name}, nx={self.spec.nx}, ny={self.spec.ny})"

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def norms(self, where: Optional[np.ndarray] = None) -> Norms:
        return norms(self, where)


class VectorField:
    """Grid-sampled 2-vector function on the FLUX lattice.

    Args:
        spec: the grid
        px: x-components, shape ``spec.shape(Layout.FLUX)``
        py: y-components, same shape
    """

    layout = Layout.FLUX

    def __init__(self, spec: GridSpec, px, py):
        self.spec = spec
        self.px = _frozen(px)
        self.py = _frozen(py)
        shape = spec.shape(Layout.FLUX)
        if self.px.shape != shape or self.py.shape != shape:
            raise PAreaErrorStructureMismatch(
                f"components of shapes {self.px.shape}, {self.py.shape} "
                f"on FLUX lattice of shape {shape}")
        _check_finite(self.px, self.py)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "VectorField":
        shape = spec.shape(Layout.FLUX)
        return cls(spec, np.zeros(shape), np.zeros(shape))

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable) -> "VectorField":
        """Sample ``fn(X, Y) -> (fx, fy)`` pointwise on the FLUX lattice."""
        X, Y = spec.coordinates(Layout.FLUX)
        fx, fy = fn(X, Y)
        return cls(spec, np.broadcast_to(fx, X.shape), np.broadcast_to(fy, X.shape))

    def with_components(self, px, py) -> "VectorField":
        return VectorField(self.spec, px, py)

    def at_node(self, i: int, j: int) -> Tuple[float, float]:
        """Components at interior node ``(i, j)``."""
        return float(self.px[i + 1, j + 1]), float(self.py[i + 1, j + 1])

    def magnitude(self) -> ScalarField:
        return ScalarField(self.spec, np.hypot(self.px, self.py), Layout.FLUX)

    def dot(self, other: "VectorField") -> ScalarField:
        _check_compatible(self, other)
        return ScalarField(self.spec, self.px * other.px + self.py * other.py, Layout.FLUX)

    def masked(self, mask: np.ndarray) -> "VectorField":
        """Copy with the components zeroed where ``mask`` is true."""
        return self.with_components(np.where(mask, 0.0, self.px), np.where(mask, 0.0, self.py))

    def _operand(self, other):
        if isinstance(other, VectorField):
            _check_compatible(self, other)
            return other.px, other.py
        if isinstance(other, ScalarField):
            _check_compatible(self, other)
            return other.values, other.values
        return other, other

    def __add__(self, other):
        ox, oy = self._operand(other)
        return self.with_components(self.px + ox, self.py + oy)

    __radd__ = __add__

    def __sub__(self, other):
        ox, oy = self._operand(other)
        return self.with_components(self.px - ox, self.py - oy)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            raise TypeError("use dot() for the pointwise inner product")
        ox, oy = self._operand(other)
        return self.with_components(self.px * ox, self.py * oy)

    __rmul__ = __mul__

    def __truediv__(self, other):
        ox, oy = self._operand(other)
        return self.with_components(self.px / ox, self.py / oy)

    def __neg__(self):
        return self.with_components(-self.px, -self.py)

    def __repr__(self):
        return f"VectorField(nx={self.spec.nx}, ny={self.spec.ny})"

    def norms(self, where: Optional[np.ndarray] = None) -> Norms:
        return norms(self, where)


Field = Union[ScalarField, VectorField]


def _check_compatible(a: Field, b: Field) -> None:
    if a.spec != b.spec:
        raise PAreaErrorStructureMismatch(f"grids differ: {a.spec} vs {b.spec}")
    if a.layout is not b.layout:
        raise PAreaErrorStructureMismatch(f"layouts differ: {a.layout.name} vs {b.layout.name}")


def forward_differences(values: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Forward differences of NODE values onto the FLUX lattice (zero closure)."""
    nx, ny = values.shape
    closed = np.zeros((nx + 2, ny + 2))
    closed[1:-1, 1:-1] = values
    px = (closed[1:, :-1] - closed[:-1, :-1]) / h
    py = (closed[:-1, 1:] - closed[:-1, :-1]) / h
    return px, py


def backward_differences(px: np.ndarray, py: np.ndarray, h: float) -> np.ndarray:
    """Backward-difference divergence of FLUX components onto the NODE lattice."""
    return (px[1:, 1:] - px[:-1, 1:]) / h + (py[1:, 1:] - py[1:, :-1]) / h


def gradient(u: ScalarField) -> VectorField:
    """Forward-difference gradient of a zero-Dirichlet NODE field.

    ``(u[i+1,j] - u[i,j]) / h`` and ``(u[i,j+1] - u[i,j]) / h``, where the
    stencil reaching past the interior reads the boundary value 0.
    """
    if u.layout is not Layout.NODE:
        raise PAreaErrorStructureMismatch("gradient expects a NODE field")
    px, py = forward_differences(u.values, u.spec.h)
    return VectorField(u.spec, px, py)


def divergence(p: VectorField) -> ScalarField:
    """Backward-difference divergence; the negative adjoint of :func:`gradient`."""
    return ScalarField(p.spec, backward_differences(p.px, p.py, p.spec.h), Layout.NODE)


def laplacian(u: ScalarField) -> ScalarField:
    """5-point Dirichlet Laplacian, ``divergence(gradient(u))``."""
    return divergence(gradient(u))


def curl(p: VectorField) -> ScalarField:
    """Scalar curl ``dpy/dx - dpx/dy`` on the FLUX cells.

    Cell ``(k, l)`` spans FLUX points ``k..k+1`` and ``l..l+1``; the result has
    NODE shape, its sample points offset by half a cell from the nodes.
    """
    h = p.spec.h
    values = (p.py[1:, :-1] - p.py[:-1, :-1]) / h - (p.px[:-1, 1:] - p.px[:-1, :-1]) / h
    return ScalarField(p.spec, values, Layout.NODE)


def pointwise_magnitude(f: Field) -> np.ndarray:
    if isinstance(f, VectorField):
        return np.hypot(f.px, f.py)
    return np.abs(f.values)


def norms(f: Field, where: Optional[np.ndarray] = None) -> Norms:
    """Quadrature norms: ``L1 = h^2 sum|.|``, ``L2 = (h^2 sum|.|^2)^(1/2)``, ``Linf = max|.|``.

    Args:
        f: scalar or vector field; vectors use the pointwise Euclidean magnitude
        where: optional boolean array selecting the nodes that take part
    """
    magnitude = pointwise_magnitude(f)
    if where is not None:
        magnitude = magnitude[np.asarray(where, dtype=bool)]
    if magnitude.size == 0:
        return Norms(0.0, 0.0, 0.0)
    h2 = f.spec.h ** 2
    return Norms(l1=float(h2 * magnitude.sum()),
                 l2=float(math.sqrt(h2 * np.square(magnitude).sum())),
                 linf=float(magnitude.max()))


def inner_product(a: Field, b: Field) -> float:
    """``h^2`` times the sum of the pointwise product (dot product for vectors).

    Raises:
        PAreaErrorStructureMismatch: if grids, layouts or field kinds differ
    """
    if type(a) is not type(b):
        raise PAreaErrorStructureMismatch(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    _check_compatible(a, b)
    if isinstance(a, VectorField):
        total = np.sum(a.px * b.px) + np.sum(a.py * b.py)
    else:
        total = np.sum(a.values * b.values)
    return float(a.spec.h ** 2 * total)
