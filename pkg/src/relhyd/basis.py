"""Nodal machinery on the reference element [0, 1].

Gauss-Legendre solution points, quadrature weights, Lagrange differentiation,
face extrapolation, and the boundary-correction polynomials used to lift
numerical face fluxes into the element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

MIN_DEGREE = 1
MAX_DEGREE = 4

SUPPORTED_CORRECTIONS = ("radau", "g2")


class UnsupportedDegreeError(ValueError):
    """Raised for polynomial degrees outside the supported range."""


@dataclass(frozen=True)
class BasisData:
    """Precomputed nodal operators for one polynomial degree.

    All quantities live on the reference element [0, 1].  `diff_matrix[i, j]`
    is the derivative of the j-th Lagrange basis polynomial at node i;
    `extrap_left/right` evaluate the basis at the element faces;
    `corr_deriv_left/right` hold the correction-function derivatives at the
    nodes.
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    extrap_left: np.ndarray
    extrap_right: np.ndarray
    corr_deriv_left: np.ndarray
    corr_deriv_right: np.ndarray
    correction: str = "radau"
    # Orthonormal Legendre values at the nodes, scaled by the weights; used
    # for nodal -> modal projection by the smoothness indicator.
    modal_project: np.ndarray = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.degree + 1


def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = npleg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def lagrange_values(nodes: np.ndarray, x: float) -> np.ndarray:
    """Evaluate every Lagrange basis polynomial of `nodes` at the point x."""
    n = len(nodes)
    vals = np.empty(n)
    for j in range(n):
        num = 1.0
        for k in range(n):
            if k != j:
                num *= (x - nodes[k]) / (nodes[j] - nodes[k])
        vals[j] = num
    return vals


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """Lagrange differentiation matrix via barycentric weights.

    Diagonal entries are the negated off-diagonal row sums, which makes every
    row sum exactly zero (derivative of a constant vanishes bitwise).
    """
    n = len(nodes)
    bary = np.ones(n)
    for i in range(n):
        for j in range(n):
            if j != i:
                bary[i] /= nodes[i] - nodes[j]
    dmat = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                dmat[i, j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j])
        dmat[i, i] = -np.sum(dmat[i, :])
    return dmat


def _correction_series(degree: int, correction: str) -> tuple[npleg.Legendre, npleg.Legendre]:
    """Left/right correction polynomials as Legendre series on [-1, 1]."""
    n = degree
    if correction == "radau":
        right = np.zeros(n + 2)
        right[n] = 0.5
        right[n + 1] = 0.5
    elif correction == "g2":
        eta = (n + 1.0) / n
        right = np.zeros(n + 2)
        right[n] = 0.5
        right[n - 1] = 0.5 * eta / (1.0 + eta)
        right[n + 1] = 0.5 / (1.0 + eta)
    else:
        raise ValueError(f"unknown correction function {correction!r}")
    left = right.copy()
    left[1::2] *= -1.0  # mirror x -> -x
    return npleg.Legendre(left), npleg.Legendre(right)


def build_basis(degree: int, correction: str = "radau") -> BasisData:
    """Assemble all nodal operators for the given solution-polynomial degree.

    Degrees 1..4 are supported; the single-stage temporal derivative formulas
    exist only for these.
    """
    if not MIN_DEGREE <= degree <= MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"degree must be in [{MIN_DEGREE}, {MAX_DEGREE}], got {degree}"
        )
    nodes, weights = gauss_legendre_unit(degree + 1)
    dmat = differentiation_matrix(nodes)
    ext_l = lagrange_values(nodes, 0.0)
    ext_r = lagrange_values(nodes, 1.0)

    h_left, h_right = _correction_series(degree, correction)
    # Boundary values the lifting relies on: h_L(0)=1, h_L(1)=0 and mirrored.
    ref = np.array([-1.0, 1.0])
    if not (np.allclose(h_left(ref), [1.0, 0.0], atol=1e-12)
            and np.allclose(h_right(ref), [0.0, 1.0], atol=1e-12)):
        raise AssertionError("correction polynomials violate boundary conditions")
    x_nodes = 2.0 * nodes - 1.0
    corr_l = 2.0 * h_left.deriv()(x_nodes)
    corr_r = 2.0 * h_right.deriv()(x_nodes)

    modal = _modal_projection(nodes, weights)

    return BasisData(
        degree=degree,
        nodes=nodes,
        weights=weights,
        diff_matrix=dmat,
        extrap_left=ext_l,
        extrap_right=ext_r,
        corr_deriv_left=corr_l,
        corr_deriv_right=corr_r,
        correction=correction,
        modal_project=modal,
    )


def _modal_projection(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Matrix taking nodal values to orthonormal-Legendre modal coefficients.

    Row j is w_i * Lhat_j(xi_i) with Lhat_j orthonormal on [0, 1]; the
    quadrature is exact for the products involved, so the projection of
    degree-<=N nodal data is exact.
    """
    n = len(nodes)
    proj = np.empty((n, n))
    x = 2.0 * nodes - 1.0
    for j in range(n):
        coeff = np.zeros(j + 1)
        coeff[j] = np.sqrt(2.0 * j + 1.0)  # orthonormal on [0, 1]
        proj[j, :] = weights * npleg.legval(x, coeff)
    return proj


def nodal_derivative(basis: BasisData, values: np.ndarray) -> np.ndarray:
    """Derivative (w.r.t. the reference coordinate) of nodal data.

    Exact for polynomial data of degree <= N.  `values` may carry leading
    axes; the node axis is the last one.
    """
    return values @ basis.diff_matrix.T


def extrapolate_faces(basis: BasisData, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate nodal data at the element faces (reference 0 and 1)."""
    return values @ basis.extrap_left, values @ basis.extrap_right


@dataclass(frozen=True)
class Mesh:
    """Uniform Cartesian mesh in one or two dimensions."""

    bounds: tuple[tuple[float, float], ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.cells) or len(self.cells) not in (1, 2):
            raise ValueError("mesh must be 1-D or 2-D with matching bounds/cells")
        for (lo, hi), n in zip(self.bounds, self.cells):
            if not hi > lo or n < 1:
                raise ValueError("mesh bounds must be increasing and cells positive")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.bounds, self.cells))

    def element_edges(self, axis: int = 0) -> np.ndarray:
        lo, hi = self.bounds[axis]
        return np.linspace(lo, hi, self.cells[axis] + 1)

    def node_coords(self, basis: BasisData, axis: int = 0) -> np.ndarray:
        """Physical node coordinates, shape (cells, n_nodes)."""
        lo, _ = self.bounds[axis]
        dx = self.spacing[axis]
        left = lo + dx * np.arange(self.cells[axis])
        return left[:, None] + dx * basis.nodes[None, :]


def mesh_1d(lo: float, hi: float, n: int) -> Mesh:
    return Mesh(bounds=((lo, hi),), cells=(n,))


def mesh_2d(xlo: float, xhi: float, ylo: float, yhi: float, nx: int, ny: int) -> Mesh:
    return Mesh(bounds=((xlo, xhi), (ylo, yhi)), cells=(nx, ny))
