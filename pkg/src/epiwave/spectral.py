"""Principal eigenvalues of the linearized infection operator.

The linearization of the renewal map at the disease-free state acts on
periodic functions by

    (L phi)(x) = g'(0) * integral V(x, y) phi(y) dy,

and its dominant eigenvalue decides between epidemic propagation and
extinction. This module assembles L on the periodicity cell, its
Dirichlet truncations L_R to balls of the sampling window, and computes
principal eigenpairs by power iteration: the kernel is nonnegative with
a positive band, so the dominant eigenvalue is simple and the iteration
converges from any positive start.

Quadrature is the composite midpoint rule of the grid; for kernels whose
jumps fall on grid-aligned edges (half-value convention in the kernel
evaluators) the eigenvalue error is second order in the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse

from .errors import ConvergenceError, ValidationError

DEFAULT_EIGEN_TOL = 1e-10
DEFAULT_SWEEP_INCREMENT = 1e-3


@dataclass
class OperatorMatrix:
    """A discretized positive integral operator.

    entries already contain the response slope and the quadrature weight,
    so apply() is a plain matrix-vector product. weight, when present, is
    the density gamma2/gamma1 making the operator self-adjoint in the
    weighted inner product; node_indices maps ball rows back to window
    nodes.
    """

    entries: object  # dense ndarray or scipy sparse matrix
    domain_tag: str  # "cell" or "ball"
    radius: float | None = None
    weight: np.ndarray | None = None
    quadrature: float = 1.0
    node_indices: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.entries @ v
        return np.asarray(out).ravel()

    def rayleigh_quotient(self, v: np.ndarray) -> float:
        """Weighted quotient <Av, v>_gamma / <v, v>_gamma."""
        if self.weight is None:
            raise ValidationError(
                "operator carries no symmetry weight; Rayleigh quotient undefined"
            )
        num = float(np.sum(self.weight * v * self.apply(v)))
        den = float(np.sum(self.weight * v * v))
        if den == 0.0:
            raise ValidationError("Rayleigh quotient of the zero vector")
        return num / den

    def symmetry_defect(self) -> float:
        """Max-norm asymmetry of diag(gamma * w) A, relative to the entry scale."""
        if self.weight is None:
            raise ValidationError("operator carries no symmetry weight")
        A = self.entries
        if scipy.sparse.issparse(A):
            A = A.toarray()
        weighted = (self.weight * self.quadrature)[:, None] * A
        scale = np.max(np.abs(A))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(weighted - weighted.T)) / scale)


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


class SweepPoint(NamedTuple):
    radius: float
    value: float
    residual: float
    iterations: int


@dataclass
class SubEigenfunction:
    """Compactly supported comparison function on the window grid.

    values vanish outside the ball of the given radius and satisfy
    (L values)(x) >= threshold * values(x) at every window node, with
    threshold = lambda_1 - eps.
    """

    values: np.ndarray
    radius: float
    cutoff_width: float
    threshold: float
    ball_value: float


def assemble_periodic(transfer, response, grid=None) -> OperatorMatrix:
    """Matrix of the periodic linearized operator on the cell grid."""
    grid = grid if grid is not None else transfer.grid
    entries = response.slope0 * transfer.cell_matrix * grid.weight
    return OperatorMatrix(
        entries=np.asarray(entries, dtype=float),
        domain_tag="cell",
        weight=transfer.gamma_cell,
        quadrature=grid.weight,
    )


def assemble_ball(transfer, response, radius: float) -> OperatorMatrix:
    """Dirichlet truncation of the whole-line operator to a ball of the window."""
    grid = transfer.grid
    idx = grid.ball_indices(radius)
    W = transfer.window_matrix()
    sub = W[idx][:, idx] if scipy.sparse.issparse(W) else W[np.ix_(idx, idx)]
    gamma = transfer.gamma_window()
    return OperatorMatrix(
        entries=sub * (response.slope0 * grid.weight),
        domain_tag="ball",
        radius=float(radius),
        weight=None if gamma is None else gamma[idx],
        quadrature=grid.weight,
        node_indices=idx,
    )


def principal_eigenpair(op: OperatorMatrix, tol: float = DEFAULT_EIGEN_TOL,
                        max_iter: int = 20000) -> EigenPair:
    """Dominant eigenpair of a nonnegative operator matrix by power iteration.

    Starts from the constant positive vector, keeps the iterate normalized
    to sup = 1, and stops once the sup-norm residual drops below tol. When
    the operator carries a symmetry weight, the weighted Rayleigh quotient
    of the returned vector is checked against the eigenvalue as a guard on
    the assembly.
    """
    x = np.ones(op.n)
    y = op.apply(x)
    if not np.any(y > 0):
        # the zero operator: everything is annihilated, the constant works
        return EigenPair(value=0.0, vector=x, residual=0.0, iterations=1)

    residual = np.inf
    value = 0.0
    for iterations in range(1, max_iter + 1):
        value = float(np.max(y))
        if value <= 0.0:
            raise ValidationError(
                "power iterate lost positivity; the operator has no positive band"
            )
        residual = float(np.max(np.abs(y - value * x)))
        if residual <= tol:
            break
        x = y / value
        y = op.apply(x)
    else:
        raise ConvergenceError(
            f"power iteration stalled at residual {residual:.3e} "
            f"(tolerance {tol:.1e}) after {max_iter} iterations"
        )

    if np.min(x) <= 0.0:
        raise ValidationError(
            "principal eigenfunction is not strictly positive; the kernel "
            "does not connect all grid nodes"
        )
    if op.weight is not None:
        rq = op.rayleigh_quotient(x)
        absx = np.abs(x)
        amplification = float(
            np.sum(op.weight * absx) / np.sum(op.weight * x * x)
        )
        if abs(rq - value) > 4.0 * max(tol, residual) * amplification + 1e-13:
            raise ConvergenceError(
                f"weighted Rayleigh quotient {rq!r} disagrees with the power "
                f"eigenvalue {value!r}; operator assembly is inconsistent"
            )
    return EigenPair(value=value, vector=x, residual=residual,
                     iterations=iterations)


def eigenvalue_bounds(transfer, response) -> tuple[float, float]:
    """Row-integral sandwich around the principal eigenvalue.

    The eigenvalue of a positive operator is bracketed by the extremes of
    g'(0) * integral V(x, y) dy over x; for homogeneous kernels the two
    coincide and pin the eigenvalue exactly.
    """
    rows = response.slope0 * transfer.row_integrals
    return float(np.min(rows)), float(np.max(rows))


def ball_eigenvalue_sweep(transfer, response, radii=None,
                          tol: float = DEFAULT_EIGEN_TOL,
                          max_iter: int = 20000,
                          stop_increment: float | None = None) -> list[SweepPoint]:
    """Principal eigenvalues of the ball truncations for increasing radii.

    The sequence increases to the periodic eigenvalue from below. radii
    defaults to the integer radii the window can hold; pass stop_increment
    to terminate the sweep once consecutive eigenvalues differ by less.
    """
    grid = transfer.grid
    if radii is None:
        radii = list(range(1, grid.window_radius + 1))
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError(f"sweep radii must be strictly increasing: {radii}")

    points: list[SweepPoint] = []
    for r in radii:
        pair = principal_eigenpair(assemble_ball(transfer, response, r),
                                   tol=tol, max_iter=max_iter)
        points.append(SweepPoint(r, pair.value, pair.residual, pair.iterations))
        if (stop_increment is not None and len(points) >= 2
                and points[-1].value - points[-2].value < stop_increment):
            break
    return points


def sub_eigenfunction(transfer, response, eps: float,
                      tol: float = DEFAULT_EIGEN_TOL,
                      max_iter: int = 20000) -> SubEigenfunction:
    """Compactly supported function with L phi >= (lambda_1 - eps) phi everywhere.

    Takes the principal eigenfunction of the smallest ball whose eigenvalue
    exceeds lambda_1 - eps/2 and tapers it to zero over a thin shell at the
    ball boundary. The taper width starts at one grid cell and is halved
    until the pointwise inequality holds at every window node: the operator
    integrates over the shell, so its contribution vanishes with the width
    while the interior keeps the ball eigenvalue's slack.
    """
    grid = transfer.grid
    periodic = principal_eigenpair(assemble_periodic(transfer, response),
                                   tol=tol, max_iter=max_iter)
    lam = periodic.value
    if not 0.0 < eps < lam:
        raise ValidationError(
            f"eps must lie strictly between 0 and lambda_1 = {lam:.6g}, got {eps}"
        )

    chosen = None
    for radius in range(1, grid.window_radius + 1):
        pair = principal_eigenpair(assemble_ball(transfer, response, radius),
                                   tol=tol, max_iter=max_iter)
        if pair.value > lam - eps / 2.0:
            chosen = (float(radius), pair)
            break
    if chosen is None:
        raise ValidationError(
            f"no ball inside the window of radius {grid.window_radius} reaches "
            f"eigenvalue {lam - eps / 2.0:.6g}; enlarge the window"
        )
    radius, ball_pair = chosen

    idx = grid.ball_indices(radius)
    phi_ball = np.zeros(grid.n_window)
    phi_ball[idx] = ball_pair.vector
    r = np.linalg.norm(grid.window_nodes, axis=1)

    W = transfer.window_matrix()
    scale = response.slope0 * grid.weight
    threshold = lam - eps
    slack = 1e-12 * max(lam, 1.0)

    eta = grid.spacing
    for _ in range(60):
        chi = np.clip((radius - r) / eta, 0.0, 1.0)
        values = phi_ball * chi
        defect = scale * (W @ values) - threshold * values
        if np.min(defect) >= -slack:
            return SubEigenfunction(values=values, radius=radius,
                                    cutoff_width=eta, threshold=threshold,
                                    ball_value=ball_pair.value)
        eta /= 2.0
    raise ConvergenceError(
        "taper width shrank below resolution without satisfying the "
        "sub-eigenfunction inequality"
    )
