"""Self-maps of the torus, their conjugate deformations, and the
first-order deformation derivative.

A map is stored as an integer linear part plus a periodic displacement,
T(x) = A x + g(x) mod 1 -- the normal form any continuous torus map's lift
forces -- together with an invariant density.  Expanding circle maps carry a
runtime invariance certificate (a transfer-operator residual); everything
else is accepted on trust and flagged uncertified.

Deforming by the flow of a field X gives the conjugate family
T_t = phi^t o T o phi^{-t}; its t-derivative at 0 is the section
-DT(X) + X o T, representable as a plain vector field thanks to the torus
parallelism.  The invariance defect DT(V) - V o T measures how far a
candidate field V is from being T-invariant, which is exactly the kernel of
the map from conjugating fields to deformation derivatives.
"""

from __future__ import annotations

import numpy as np

from .errors import ConstructionError, ExpansionError
from .fields import (
    ScalarField,
    TorusGrid,
    VectorFieldT,
    VolumeDensity,
    as_points,
)
from .flow import FlowEvaluation, integrate_flow, inverse_flow

BISECTION_ITERATIONS = 60
EXPANSION_MARGIN = 0.01
CERTIFICATE_RESOLUTION = 256
CERTIFICATE_TOL = 1e-6

__all__ = [
    "TorusMap",
    "make_linear",
    "make_warped_doubling",
    "DeformedMap",
    "ConjugatedMap",
    "deformed_map_eval",
    "deformation_derivative",
    "invariance_defect",
]


class TorusMap:
    """Smooth torus self-map A x + g(x) mod 1 with an invariant density."""

    def __init__(self, grid: TorusGrid, matrix, displacement: VectorFieldT | None = None,
                 density: VolumeDensity | None = None, family: str = "custom",
                 certify: bool = True):
        matrix = np.asarray(matrix)
        if matrix.shape != (grid.dim, grid.dim):
            raise ValueError(f"linear part must be {grid.dim}x{grid.dim}, got {matrix.shape}")
        if not np.array_equal(matrix, np.round(matrix)):
            raise ValueError("linear part must be an integer matrix")
        matrix = matrix.astype(int)
        if round(abs(float(np.linalg.det(matrix)))) == 0:
            raise ValueError("linear part is degenerate (determinant 0)")
        if displacement is not None and displacement.grid != grid:
            raise ValueError("displacement lives on a different grid")
        if density is not None and density.grid != grid:
            raise ValueError("density lives on a different grid")
        self.grid = grid
        self.matrix = matrix
        self.displacement = displacement if displacement is not None else VectorFieldT.zero(grid)
        self.density = density if density is not None else VolumeDensity.lebesgue(grid)
        self.family = family
        self._has_displacement = self.displacement.sup_norm > 0.0
        self._jacobian_stack = None
        self._expansion_margin = None
        self.certified = False
        self.certificate_residual = None
        if family == "linear" and np.all(self.density.eta.values == 1.0):
            # integer-linear maps preserve Lebesgue exactly
            self.certified = True
            self.certificate_residual = 0.0
        elif certify and grid.dim == 1 and self.expansion_margin() > 0.0:
            from .verify import transfer_check  # deferred: verify sits above dynamics

            residual = transfer_check(self, self.density, CERTIFICATE_RESOLUTION)
            if residual > CERTIFICATE_TOL:
                raise ConstructionError(
                    "the provided density is not invariant: transfer residual "
                    f"{residual:.3e} exceeds {CERTIFICATE_TOL:.0e}",
                    residual,
                )
            self.certified = True
            self.certificate_residual = residual

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def degree(self) -> int:
        if self.dim != 1:
            raise ValueError("degree is only defined here for circle maps")
        return int(self.matrix[0, 0])

    def lift(self, points) -> np.ndarray:
        """Lift values A x + g(x) without reduction mod 1."""
        pts = as_points(points, self.dim)
        out = pts @ self.matrix.T.astype(float)
        if self._has_displacement:
            out = out + self.displacement.sample(pts)
        return out

    def __call__(self, points) -> np.ndarray:
        return self.lift(points) % 1.0

    def _displacement_derivative_stack(self) -> np.ndarray:
        if self._jacobian_stack is None:
            n = self.dim
            coeffs = [
                self.displacement.components[i].derivative(j).coefficients
                for i in range(n)
                for j in range(n)
            ]
            self._jacobian_stack = np.stack(coeffs)
        return self._jacobian_stack

    def jacobian(self, points) -> np.ndarray:
        """DT = A + Dg at arbitrary points, shape (M, n, n)."""
        pts = as_points(points, self.dim)
        n = self.dim
        out = np.tile(self.matrix.astype(float), (pts.shape[0], 1, 1))
        if self._has_displacement:
            from .fields import sample_coefficients

            dg = sample_coefficients(self.grid, self._displacement_derivative_stack(), pts)
            out += dg.reshape(-1, n, n)
        return out

    def jacobian_on_grid(self) -> np.ndarray:
        """DT at the grid points, exact (no interpolation), shape (size, n, n)."""
        n = self.dim
        out = np.tile(self.matrix.astype(float), (self.grid.size, 1, 1))
        if self._has_displacement:
            for i in range(n):
                for j in range(n):
                    out[:, i, j] += self.displacement.components[i].derivative(j).values.ravel()
        return out

    def expansion_margin(self, samples: int = 4096) -> float:
        """min |F'| - 1 over a fine sample of the lift derivative F' of a
        circle map; negative (or -inf if F' changes sign) means not expanding."""
        if self.dim != 1:
            raise ValueError("expansion margin is only defined for circle maps")
        if self._expansion_margin is None:
            x = np.linspace(0.0, 1.0, samples, endpoint=False).reshape(-1, 1)
            deriv = self.jacobian(x)[:, 0, 0]
            if deriv.min() * deriv.max() <= 0.0:
                self._expansion_margin = -np.inf
            else:
                self._expansion_margin = float(np.min(np.abs(deriv))) - 1.0
        return self._expansion_margin

    def preimages_with_derivative(self, y):
        """All |degree| preimages of circle points under an expanding map,
        with the lift derivative there; shapes (d, M).

        Branch inversion runs a 60-iteration bisection per monotone branch of
        the lift, vectorized over targets.
        """
        if self.dim != 1:
            raise ValueError("preimage enumeration is only implemented for circle maps")
        margin = self.expansion_margin()
        if margin < EXPANSION_MARGIN:
            raise ExpansionError(
                "preimage enumeration needs a uniformly expanding lift; "
                f"min |F'| - 1 = {margin:.3g} < {EXPANSION_MARGIN}"
            )
        y = as_points(y, 1)[:, 0] % 1.0
        z = _branch_bisection(lambda v: self.lift(v)[:, 0], abs(self.degree), y)
        deriv = self.jacobian(z.reshape(-1, 1))[:, 0, 0].reshape(z.shape)
        return z, deriv


def _branch_bisection(lift_fn, branches: int, targets_mod1: np.ndarray) -> np.ndarray:
    """Solve F(z) = y (mod 1) on [0, 1] for a strictly monotone lift F of an
    expanding circle map with |degree| = branches."""
    m = targets_mod1.shape[0]
    ends = lift_fn(np.array([0.0, 1.0]))
    f0, f1 = float(ends[0]), float(ends[1])
    increasing = f1 > f0
    fmin = min(f0, f1)
    first = np.ceil(fmin - targets_mod1)
    targets = targets_mod1[None, :] + first[None, :] + np.arange(branches)[:, None]
    lo = np.zeros((branches, m))
    hi = np.ones((branches, m))
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        fm = lift_fn(mid.ravel()).reshape(branches, m)
        right = fm < targets if increasing else fm > targets
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


def make_linear(matrix, grid: TorusGrid) -> TorusMap:
    """Integer-linear torus map; Lebesgue is invariant.  The single-entry
    matrix [[2]] is the circle doubling map, [[2, 1], [1, 1]] the cat map,
    and [[1]] the (degenerate) identity."""
    return TorusMap(grid, matrix, family="linear")


def make_warped_doubling(generator: VectorFieldT, construction_steps: int = 128) -> TorusMap:
    """Doubling map conjugated by the time-one flow h of the generator:
    T = h o D o h^{-1}, whose invariant density is the derivative of h^{-1}
    (the pushforward of Lebesgue by h), positive by construction.

    The returned map carries the invariance certificate; construction fails
    if the transfer residual exceeds the certificate tolerance.
    """
    grid = generator.grid
    if grid.dim != 1:
        raise ValueError("warped doubling is a circle-map construction")
    pts = grid.points()
    forward = integrate_flow(generator, 1.0, pts, steps=construction_steps)
    backward = integrate_flow(generator, -1.0, pts, steps=construction_steps)
    h_displacement = ScalarField(grid, (forward.lifts[:, 0] - pts[:, 0]).reshape(grid.shape))
    inverse_lift = backward.lifts[:, 0]
    eta_values = backward.jacobians[:, 0, 0]
    eta_values = eta_values / eta_values.mean()
    doubled = 2.0 * inverse_lift
    t_lift = doubled + h_displacement.sample(doubled.reshape(-1, 1))
    g_values = t_lift - 2.0 * pts[:, 0]
    displacement = VectorFieldT([ScalarField(grid, g_values.reshape(grid.shape))])
    density = VolumeDensity(ScalarField(grid, eta_values.reshape(grid.shape)))
    return TorusMap(grid, [[2]], displacement, density, family="warped_doubling")


def _conjugated_eval(base: TorusMap, forward, inverse, points) -> np.ndarray:
    down = inverse(points, jacobian=False)
    middle = base(down.points)
    return forward(middle, jacobian=False).points


def _conjugated_lift(base: TorusMap, forward, inverse, points) -> np.ndarray:
    down = inverse(points, jacobian=False)
    middle = base.lift(down.lifts)
    return forward(middle, jacobian=False).lifts


def _conjugated_preimages(base: TorusMap, forward, inverse, y):
    """Preimages of h o T o h^{-1} through the conjugacy: pull y back by h,
    enumerate base preimages there, push forward by h.  The derivative at a
    preimage follows from the chain rule,
    (h o T o h^{-1})'(z_j) = T'(w_j) / (Dh^{-1}(y) * Dh(w_j))."""
    y = as_points(y, 1)
    down = inverse(y, jacobian=True)
    j_down = down.jacobians[:, 0, 0]
    w, base_deriv = base.preimages_with_derivative(down.points[:, 0])
    up = forward(w.reshape(-1, 1), jacobian=True)
    pre = up.points[:, 0].reshape(w.shape)
    j_up = up.jacobians[:, 0, 0].reshape(w.shape)
    deriv = base_deriv / (j_down[None, :] * j_up)
    return pre, deriv


class DeformedMap:
    """The conjugated family T_t = phi^t o T o phi^{-t} for a fixed field.

    At t = 0 evaluation short-circuits to the base map, exactly.
    """

    def __init__(self, base: TorusMap, field: VectorFieldT, t: float,
                 steps: int | None = None):
        if base.grid != field.grid:
            raise ValueError("map and field live on different grids")
        self.base = base
        self.field = field
        self.t = float(t)
        self.steps = steps

    def _forward(self, points, jacobian=True) -> FlowEvaluation:
        return integrate_flow(self.field, self.t, points, steps=self.steps,
                              jacobian=jacobian)

    def _inverse(self, points, jacobian=True) -> FlowEvaluation:
        return inverse_flow(self.field, self.t, points, steps=self.steps,
                            jacobian=jacobian)

    def __call__(self, points) -> np.ndarray:
        pts = as_points(points, self.base.dim)
        if self.t == 0.0:
            return self.base(pts)
        return _conjugated_eval(self.base, self._forward, self._inverse, pts)

    def lift(self, points) -> np.ndarray:
        pts = as_points(points, self.base.dim)
        if self.t == 0.0:
            return self.base.lift(pts)
        return _conjugated_lift(self.base, self._forward, self._inverse, pts)

    @property
    def degree(self) -> int:
        return self.base.degree

    def preimages_with_derivative(self, y):
        if self.t == 0.0:
            return self.base.preimages_with_derivative(y)
        return _conjugated_preimages(self.base, self._forward, self._inverse, y)


class ConjugatedMap:
    """h o T o h^{-1} for a diffeomorphism h given as a pair of transports
    (for example a Moser time-one flow and its inverse)."""

    def __init__(self, base: TorusMap, forward, inverse):
        self.base = base
        self.forward = forward
        self.inverse = inverse

    @classmethod
    def from_moser(cls, base: TorusMap, transport) -> "ConjugatedMap":
        return cls(base, transport.transport, transport.inverse_transport)

    def __call__(self, points) -> np.ndarray:
        return _conjugated_eval(self.base, self.forward, self.inverse,
                                as_points(points, self.base.dim))

    def lift(self, points) -> np.ndarray:
        return _conjugated_lift(self.base, self.forward, self.inverse,
                                as_points(points, self.base.dim))

    @property
    def degree(self) -> int:
        return self.base.degree

    def preimages_with_derivative(self, y):
        return _conjugated_preimages(self.base, self.forward, self.inverse, y)


def deformed_map_eval(deformed: DeformedMap, points) -> np.ndarray:
    """Evaluate phi^t(T(phi^{-t}(x))) pointwise."""
    return deformed(points)


def deformation_derivative(T: TorusMap, X: VectorFieldT) -> VectorFieldT:
    """The t-derivative at 0 of phi^t o T o phi^{-t}: -DT(X) + X o T,
    returned as a vector-valued function of the source point."""
    if T.grid != X.grid:
        raise ValueError("map and field live on different grids")
    grid = T.grid
    pts = grid.points()
    pushed = -np.einsum("mij,mj->mi", T.jacobian_on_grid(), X.values_matrix())
    pulled = X.sample(T(pts))
    vals = pushed + pulled
    return VectorFieldT.from_arrays(
        grid, [vals[:, i].reshape(grid.shape) for i in range(grid.dim)]
    )


def invariance_defect(T: TorusMap, V: VectorFieldT):
    """Pointwise magnitude and sup of DT(V)(x) - V(T(x)); the sup vanishes
    exactly when V is T-invariant."""
    if T.grid != V.grid:
        raise ValueError("map and field live on different grids")
    grid = T.grid
    pts = grid.points()
    defect = np.einsum("mij,mj->mi", T.jacobian_on_grid(), V.values_matrix())
    defect -= V.sample(T(pts))
    magnitude = np.sqrt((defect**2).sum(axis=1))
    field = ScalarField(grid, magnitude.reshape(grid.shape))
    return field, float(magnitude.max())
