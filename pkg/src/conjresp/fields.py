"""Uniform periodic grids and real fields on the flat torus.

Everything downstream (form solvers, flows, map deformations) is built from
the objects defined here: scalar fields sampled on uniform grids over
[0, 1)^n with lazily cached Fourier coefficients, vector fields and
(n-1)-forms stored as tuples of scalar components, and strictly positive
unit-mass densities.

Conventions:
  * grid points are x_j = j / N per axis, with n in {1, 2};
  * spectral coefficients are true Fourier coefficients,
    f(x) = sum_k c_k exp(2 pi i k . x), stored in numpy FFT order
    (wavenumbers 0, 1, ..., N/2 - 1, -N/2, ..., -1);
  * 2-d arrays are row-major with axis 0 slowest, matching the serialized
    layout;
  * fields are immutable: every operation returns a new object.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import NormalizationError, PositivityError

MIN_RESOLUTION = 8

__all__ = [
    "MIN_RESOLUTION",
    "TorusGrid",
    "ScalarField",
    "VolumeDensity",
    "VectorFieldT",
    "CoVectorForm",
    "as_points",
    "sample_coefficients",
    "multiply",
    "divide",
    "gradient",
    "divergence",
    "wrap_difference",
    "field_to_json",
    "field_from_json",
    "field_to_csv",
    "save_field",
    "load_field",
]


class TorusGrid:
    """Uniform grid on the 1- or 2-torus with per-axis even resolutions."""

    def __init__(self, resolution):
        res = tuple(int(n) for n in np.atleast_1d(resolution))
        if len(res) not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {len(res)}")
        for n in res:
            if n < MIN_RESOLUTION or n % 2 != 0:
                raise ValueError(
                    f"per-axis resolution must be even and >= {MIN_RESOLUTION}, got {res}"
                )
        self.resolution = res

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    def axis_points(self, axis: int) -> np.ndarray:
        n = self.resolution[axis]
        return np.arange(n) / n

    def meshes(self) -> list:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        axes = [self.axis_points(i) for i in range(self.dim)]
        if self.dim == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All grid points as an (size, dim) array in row-major order."""
        return np.stack([m.ravel() for m in self.meshes()], axis=1)

    def wavenumbers(self, axis: int) -> np.ndarray:
        n = self.resolution[axis]
        return np.fft.fftfreq(n, d=1.0 / n)

    def laplacian_symbol(self) -> np.ndarray:
        """Fourier symbol of the Laplacian, -4 pi^2 |k|^2, shaped like the grid."""
        ks = [self.wavenumbers(i) for i in range(self.dim)]
        if self.dim == 1:
            k2 = ks[0] ** 2
        else:
            k2 = ks[0][:, None] ** 2 + ks[1][None, :] ** 2
        return -4.0 * np.pi**2 * k2

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and self.resolution == other.resolution

    def __hash__(self):
        return hash(self.resolution)

    def __repr__(self):
        return f"TorusGrid(resolution={self.resolution})"


def as_points(points, dim: int) -> np.ndarray:
    """Coerce input to an (M, dim) float array of torus points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (M, {dim}), got {np.shape(points)}")
    return pts


def _phase_matrix(coords: np.ndarray, n: int) -> np.ndarray:
    """exp(2 pi i k x) for all FFT-ordered integer wavenumbers of an even n.

    Built from one exponential per point and cumulative products along the
    mode axis (the wavenumbers are consecutive integers), which is an order
    of magnitude faster than exponentiating the full (M, n) phase array.
    """
    half = n // 2
    base = np.exp((2j * np.pi) * coords)
    positive = np.empty((coords.shape[0], half + 1), dtype=complex)
    positive[:, 0] = 1.0
    np.cumprod(np.broadcast_to(base[:, None], (coords.shape[0], half)),
               axis=1, out=positive[:, 1:])
    out = np.empty((coords.shape[0], n), dtype=complex)
    out[:, :half] = positive[:, :half]
    out[:, half:] = positive[:, half:0:-1].conj()
    return out


def sample_coefficients(grid: TorusGrid, stack: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of several coefficient arrays at once.

    ``stack`` has shape (F,) + grid.shape; ``points`` is (M, dim).  Returns an
    (M, F) real array.  Sharing the phase matrices across the F fields is what
    keeps flow integration cheap.
    """
    pts = as_points(points, grid.dim) % 1.0
    phases = [
        _phase_matrix(pts[:, i], grid.resolution[i]) for i in range(grid.dim)
    ]
    if grid.dim == 1:
        return (phases[0] @ stack.reshape(stack.shape[0], -1).T).real
    tmp = np.tensordot(phases[0], stack, axes=([1], [1]))  # (M, F, N2)
    return np.einsum("mfl,ml->mf", tmp, phases[1]).real


class ScalarField:
    """Real periodic function sampled on a grid; spectral form cached lazily."""

    def __init__(self, grid: TorusGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)
        self._coefficients = None
        self._max_abs = None

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, coefficients) -> "ScalarField":
        coefficients = np.array(coefficients, dtype=complex)
        if coefficients.shape != grid.shape:
            raise ValueError(
                f"coefficient shape {coefficients.shape} does not match grid {grid.shape}"
            )
        values = np.fft.ifftn(coefficients).real * grid.size
        field = cls(grid, values)
        coefficients.setflags(write=False)
        field._coefficients = coefficients
        return field

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "ScalarField":
        return cls(grid, fn(*grid.meshes()))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes) -> "ScalarField":
        """Band-limited field from entries [k1(,k2), re, im], each adding
        re*cos(2 pi k.x) + im*sin(2 pi k.x)."""
        out = np.zeros(grid.shape)
        meshes = grid.meshes()
        for entry in modes:
            entry = list(entry)
            if len(entry) != grid.dim + 2:
                raise ValueError(
                    f"mode entry must have {grid.dim + 2} numbers [k..., re, im], got {entry}"
                )
            kvec, re, im = entry[: grid.dim], float(entry[-2]), float(entry[-1])
            phase = 2.0 * np.pi * sum(k * m for k, m in zip(kvec, meshes))
            out += re * np.cos(phase) + im * np.sin(phase)
        return cls(grid, out)

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            c = np.fft.fftn(self.values) / self.grid.size
            c.setflags(write=False)
            self._coefficients = c
        return self._coefficients

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def max_abs(self) -> float:
        if self._max_abs is None:
            self._max_abs = float(np.max(np.abs(self.values)))
        return self._max_abs

    def derivative(self, axis: int) -> "ScalarField":
        """Spectral partial derivative; the Nyquist mode is zeroed so real
        fields stay real and the operator stays skew-symmetric."""
        if not 0 <= axis < self.grid.dim:
            raise ValueError(f"axis {axis} out of range for a {self.grid.dim}-d field")
        n = self.grid.resolution[axis]
        k = self.grid.wavenumbers(axis)
        symbol = (2j * np.pi) * k
        symbol[k == -(n // 2)] = 0.0
        shape = [1] * self.grid.dim
        shape[axis] = n
        return ScalarField.from_coefficients(
            self.grid, self.coefficients * symbol.reshape(shape)
        )

    def sample(self, points) -> np.ndarray:
        """Trigonometric interpolation at arbitrary points (reduced mod 1)."""
        return sample_coefficients(self.grid, self.coefficients[None], points)[:, 0]

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            _require_same_grid(self, other)
            return ScalarField(self.grid, op(self.values, other.values))
        return ScalarField(self.grid, op(self.values, float(other)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return ScalarField(self.grid, float(other) - self.values)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __truediv__(self, other):
        if isinstance(other, ScalarField):
            return divide(self, other)
        return ScalarField(self.grid, self.values / float(other))

    def __repr__(self):
        return f"ScalarField(grid={self.grid!r}, mean={self.mean:.3g}, max_abs={self.max_abs:.3g})"


def _require_same_grid(*objects):
    grids = {obj.grid for obj in objects}
    if len(grids) > 1:
        raise ValueError(f"operands live on different grids: {sorted(g.resolution for g in grids)}")


def multiply(f: ScalarField, g: ScalarField, dealias: bool = False) -> ScalarField:
    """Pointwise product on the grid; ``dealias=True`` uses the 3/2-rule
    zero-padded product so verification runs can quantify aliasing."""
    _require_same_grid(f, g)
    if not dealias:
        return ScalarField(f.grid, f.values * g.values)
    return _dealiased_product(f, g)


def _padded_resolution(n: int) -> int:
    m = (3 * n) // 2
    return m if m % 2 == 0 else m + 1


def _dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    grid = f.grid
    fine = tuple(_padded_resolution(n) for n in grid.resolution)
    fine_size = int(np.prod(fine))
    index = [
        (np.fft.fftfreq(n, d=1.0 / n).astype(int)) % m
        for n, m in zip(grid.resolution, fine)
    ]

    def refine(c):
        out = np.zeros(fine, dtype=complex)
        out[np.ix_(*index)] = c
        return np.fft.ifftn(out).real * fine_size

    product = refine(f.coefficients) * refine(g.coefficients)
    c_fine = np.fft.fftn(product) / fine_size
    return ScalarField.from_coefficients(grid, c_fine[np.ix_(*index)])


def divide(f: ScalarField, g: ScalarField) -> ScalarField:
    """Pointwise quotient; the denominator must be strictly positive."""
    _require_same_grid(f, g)
    minimum = float(g.values.min())
    if minimum <= 0.0:
        idx = np.unravel_index(int(np.argmin(g.values)), g.values.shape)
        location = tuple(i / n for i, n in zip(idx, g.grid.resolution))
        raise PositivityError(
            f"quotient denominator must be strictly positive; minimum {minimum:.6g} "
            f"at grid point {location}",
            minimum,
            location,
        )
    return ScalarField(f.grid, f.values / g.values)


def wrap_difference(delta: np.ndarray) -> np.ndarray:
    """Shortest-lift representative of a torus-valued difference, in [-1/2, 1/2)."""
    return delta - np.round(delta)


class VolumeDensity:
    """Strictly positive density of unit total mass (a volume form over Lebesgue)."""

    MASS_TOL = 1e-6

    def __init__(self, eta: ScalarField, mass_tol: float = MASS_TOL):
        minimum = float(eta.values.min())
        if minimum <= 0.0:
            idx = np.unravel_index(int(np.argmin(eta.values)), eta.values.shape)
            location = tuple(i / n for i, n in zip(idx, eta.grid.resolution))
            raise PositivityError(
                f"density must be strictly positive; minimum {minimum:.6g} at {location}",
                minimum,
                location,
            )
        mean = eta.mean
        if abs(mean - 1.0) > mass_tol:
            raise NormalizationError(
                f"density must have unit mass; mean is {mean!r}", mean
            )
        self.eta = eta

    @property
    def grid(self) -> TorusGrid:
        return self.eta.grid

    @classmethod
    def lebesgue(cls, grid: TorusGrid) -> "VolumeDensity":
        return cls(ScalarField.constant(grid, 1.0))

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes) -> "VolumeDensity":
        """Density 1 + sum of the given modes (the constant part is implied)."""
        return cls(ScalarField.from_modes(grid, modes) + 1.0)

    def __repr__(self):
        return f"VolumeDensity(grid={self.grid!r}, min={float(self.eta.values.min()):.3g})"


class _ComponentTuple:
    """Shared mechanics for objects stored as a tuple of scalar components."""

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("at least one component required")
        _require_same_grid(*components)
        if len(components) != components[0].grid.dim:
            raise ValueError(
                f"expected {components[0].grid.dim} components, got {len(components)}"
            )
        self.components = components

    @property
    def grid(self) -> TorusGrid:
        return self.components[0].grid

    @property
    def dim(self) -> int:
        return len(self.components)

    def _combine(self, other, op):
        if not isinstance(other, type(self)):
            return NotImplemented
        _require_same_grid(self, other)
        return type(self)([op(a, b) for a, b in zip(self.components, other.components)])

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        return type(self)([c * float(scalar) for c in self.components])

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)([-c for c in self.components])


class VectorFieldT(_ComponentTuple):
    """Periodic vector field; on the parallelizable torus the same container
    also represents sections over a map (one R^n value per source point)."""

    @classmethod
    def zero(cls, grid: TorusGrid) -> "VectorFieldT":
        return cls([ScalarField.constant(grid, 0.0) for _ in range(grid.dim)])

    @classmethod
    def from_arrays(cls, grid: TorusGrid, arrays) -> "VectorFieldT":
        return cls([ScalarField(grid, a) for a in arrays])

    @property
    def sup_norm(self) -> float:
        return max(c.max_abs for c in self.components)

    def values_matrix(self) -> np.ndarray:
        """Component values at all grid points, as an (size, dim) array."""
        return np.stack([c.values.ravel() for c in self.components], axis=1)

    def sample(self, points) -> np.ndarray:
        stack = np.stack([c.coefficients for c in self.components])
        return sample_coefficients(self.grid, stack, points)


class CoVectorForm(_ComponentTuple):
    """(n-1)-form: a single 0-form f on the 1-torus, or a pair (a, b)
    representing a dx + b dy on the 2-torus."""

    @classmethod
    def zero(cls, grid: TorusGrid) -> "CoVectorForm":
        return cls([ScalarField.constant(grid, 0.0) for _ in range(grid.dim)])


def gradient(u: ScalarField) -> VectorFieldT:
    return VectorFieldT([u.derivative(i) for i in range(u.grid.dim)])


def divergence(v: VectorFieldT) -> ScalarField:
    out = v.components[0].derivative(0)
    for i in range(1, v.dim):
        out = out + v.components[i].derivative(i)
    return out


# -- serialization ----------------------------------------------------------

def field_to_json(field: ScalarField) -> dict:
    return {
        "dim": field.grid.dim,
        "resolution": list(field.grid.resolution),
        "values": field.values.ravel().tolist(),
    }


def field_from_json(obj: dict) -> ScalarField:
    expected = {"dim", "resolution", "values"}
    if set(obj) != expected:
        raise ValueError(f"field object must have keys {sorted(expected)}, got {sorted(obj)}")
    grid = TorusGrid(obj["resolution"])
    if grid.dim != int(obj["dim"]):
        raise ValueError("dim does not match resolution length")
    values = np.asarray(obj["values"], dtype=float).reshape(grid.shape)
    return ScalarField(grid, values)


def field_to_csv(field: ScalarField) -> str:
    """One row per grid point: coordinates then value, 17 significant digits."""
    names = [f"x{i + 1}" for i in range(field.grid.dim)]
    lines = [",".join(names + ["value"])]
    pts = field.grid.points()
    flat = field.values.ravel()
    for row, v in zip(pts, flat):
        coords = ",".join(f"{x:.17g}" for x in row)
        lines.append(f"{coords},{v:.17g}")
    return "\n".join(lines) + "\n"


def save_field(field: ScalarField, path, fmt: str = "json") -> None:
    if fmt == "json":
        with open(path, "w") as handle:
            json.dump(field_to_json(field), handle)
            handle.write("\n")
    elif fmt == "csv":
        with open(path, "w") as handle:
            handle.write(field_to_csv(field))
    else:
        raise ValueError(f"unknown field format {fmt!r}")


def load_field(path) -> ScalarField:
    with open(path) as handle:
        return field_from_json(json.load(handle))
