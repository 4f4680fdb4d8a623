"""Spatial SIR simulation and its bridge to the renewal equation.

The compartmental system tracks susceptibles S and infecteds I on the
window grid,

    dS/dt = -S(t,x) integral K(x,y) I(t,y) dy,
    dI/dt = D lap(I) + S(t,x) integral K(x,y) I(t,y) dy - mu(x) I,

and the substitution u = -ln(S/S0) turns the diffusion-free case into
the scalar renewal equation with kernel S0(y) K(x,y) exp(-mu(y) tau),
forcing driven by the initial infecteds, and response g(z) = 1 - e^{-z}.
Running both solvers on the same grid and comparing u is the strongest
cross-module oracle in the package: the two paths share no marching
code.

S is marched in logarithmic form, so its positivity and monotone decay
are exact at the discrete level, not just up to truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain.forcing import Forcing
from .domain.kernels import SeparableKernel, window_pair_matrix
from .domain.nonlinearity import saturating_exponential
from .dynamics import solve_initial_value
from .errors import ConvergenceError, ValidationError


@dataclass
class SirState:
    """Model data for the compartmental system, plus trajectories once run.

    contact_fn is the instantaneous pair rate K(x, y), compactly
    supported within support_radius and periodic under joint integer
    shifts; recovery_fn is the periodic recovery rate; susceptible_fn
    the periodic initial susceptible profile (its positivity makes the
    log change of variables well defined). infected0 is a nonnegative
    compactly supported field sampled on the window nodes.
    """

    grid: object
    contact_fn: object
    support_radius: float
    recovery_fn: object
    susceptible_fn: object
    infected0: np.ndarray
    diffusion: float | None = None
    times: np.ndarray | None = field(default=None, repr=False)
    S: np.ndarray | None = field(default=None, repr=False)
    I: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.support_radius <= 0 or not np.isfinite(self.support_radius):
            raise ValidationError(
                f"contact support radius must be finite positive, got "
                f"{self.support_radius}"
            )
        self.infected0 = np.asarray(self.infected0, dtype=float)
        if self.infected0.shape != (self.grid.n_window,):
            raise ValidationError(
                f"infected0 of shape {self.infected0.shape} does not fit "
                f"the window grid ({self.grid.n_window} nodes)"
            )
        if np.min(self.infected0) < 0:
            raise ValidationError("infected0 must be nonnegative")
        s0 = self.susceptible0()
        if np.min(s0) <= 0:
            raise ValidationError(
                "initial susceptibles must be bounded away from zero"
            )
        if self.diffusion is not None:
            if self.diffusion < 0:
                raise ValidationError(
                    f"diffusion must be nonnegative, got {self.diffusion}"
                )
            if self.grid.dim != 1:
                raise ValidationError(
                    "the diffusive variant is implemented on one-dimensional "
                    "windows only"
                )

    def susceptible0(self) -> np.ndarray:
        return np.asarray(self.susceptible_fn(self.grid.window_nodes),
                          dtype=float)

    def recovery(self) -> np.ndarray:
        return np.asarray(self.recovery_fn(self.grid.window_nodes),
                          dtype=float)

    def log_attack(self) -> np.ndarray:
        """u = -ln(S/S0) over the stored trajectory."""
        if self.S is None:
            raise ValidationError("no trajectory stored; run the simulator")
        return -np.log(self.S / self.susceptible0()[None, :])


def _laplacian(values: np.ndarray, spacing: float) -> np.ndarray:
    out = -2.0 * values
    out[:-1] += values[1:]
    out[1:] += values[:-1]
    return out / spacing**2


def simulate_sir(state: SirState, dt: float, horizon: float) -> SirState:
    """Explicit march of the compartmental system; returns a new state
    carrying the (times, S, I) trajectory.

    The step size must resolve every relaxation rate present: the
    recovery rate, the infection pressure at full susceptibility, and
    (when present) the diffusion stencil.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ValidationError(
            f"horizon {horizon} shorter than one step {dt}"
        )
    grid = state.grid
    K = window_pair_matrix(grid, state.contact_fn, state.support_radius)
    mu = state.recovery()
    S0 = state.susceptible0()
    row = float(np.max(K.sum(axis=1))) * grid.weight
    rate = float(np.max(mu)) + row * float(np.max(S0))
    if state.diffusion:
        rate += 2.0 * state.diffusion / grid.spacing**2
    if dt * rate >= 1.0:
        raise ValidationError(
            f"dt * stiffness = {dt * rate:.3g} >= 1; refine the time step "
            f"below {1.0 / rate:.3g}"
        )

    steps = int(round(horizon / dt))
    times = dt * np.arange(steps + 1)
    S = np.empty((steps + 1, grid.n_window))
    I = np.empty((steps + 1, grid.n_window))
    log_s = np.log(S0)
    S[0] = S0
    I[0] = state.infected0
    for n in range(steps):
        pressure = grid.weight * (K @ I[n])
        growth = S[n] * pressure - mu * I[n]
        if state.diffusion:
            growth = growth + state.diffusion * _laplacian(I[n], grid.spacing)
        log_s = log_s - dt * pressure
        S[n + 1] = np.exp(log_s)
        I[n + 1] = I[n] + dt * growth
        if not np.all(np.isfinite(I[n + 1])):
            raise ConvergenceError(
                f"infection density blew up at t = {times[n + 1]:.4g}"
            )
        low = float(np.min(I[n + 1]))
        if low < 0:
            node = int(np.argmin(I[n + 1]))
            raise ConvergenceError(
                f"negative infection density {low:.3e} at node "
                f"x = {grid.window_nodes[node]} and t = {times[n + 1]:.4g}; "
                "the step size is too large for this data"
            )
    return replace(state, times=times, S=S, I=I)


def sir_to_kernel(state: SirState):
    """Exact change of variables: (kernel, forcing, response) such that
    u = -ln(S/S0) solves the renewal equation with this data.

    Only the diffusion-free system admits the closed form; with a
    Laplacian the propagator of dI/dt = D lap(I) - mu I has no separable
    expression and would have to be tabulated numerically into a
    time-sliced kernel, which this bridge deliberately does not do.
    """
    if state.diffusion:
        raise ValidationError(
            "the exact bridge needs the diffusion-free system; tabulate "
            "the diffusive propagator into a TabulatedKernel if you need "
            "this variant, and skip the equivalence oracle"
        )
    grid = state.grid
    contact = state.contact_fn
    s_fn = state.susceptible_fn
    mu_fn = state.recovery_fn

    kernel = SeparableKernel(
        spatial_fn=lambda X, Y: np.asarray(contact(X, Y), dtype=float)
        * np.asarray(s_fn(np.atleast_2d(Y)), dtype=float),
        mu_fn=mu_fn,
        support_radius=state.support_radius,
        dim=grid.dim,
    )

    active = state.infected0 > 0
    nodes_y = grid.window_nodes[active]
    weights = grid.weight * state.infected0[active]
    mu_y = np.asarray(mu_fn(nodes_y), dtype=float)
    if nodes_y.shape[0]:
        data_radius = float(np.max(np.linalg.norm(nodes_y, axis=1)))
    else:
        data_radius = 0.0

    def _pairs(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not nodes_y.shape[0]:
            return np.zeros((X.shape[0], 0))
        XX = np.repeat(X, nodes_y.shape[0], axis=0)
        YY = np.tile(nodes_y, (X.shape[0], 1))
        vals = np.asarray(contact(XX, YY), dtype=float)
        return vals.reshape(X.shape[0], nodes_y.shape[0])

    def seed_pressure(t, X):
        ramp = -np.expm1(-mu_y * max(t, 0.0)) / mu_y
        return _pairs(X) @ (weights * ramp)

    def seed_limit(X):
        return _pairs(X) @ (weights / mu_y)

    forcing = Forcing(seed_pressure, seed_limit,
                      support_radius=data_radius + state.support_radius,
                      name="initial-infecteds")
    return kernel, forcing, saturating_exponential()


def equivalence_check(state: SirState, dt: float, horizon: float) -> float:
    """Sup-norm gap between the two routes to the attack variable u.

    Runs the compartmental march, forms -ln(S/S0), runs the renewal
    solver on the bridged data, and reports the largest difference over
    interior nodes and all output times. First-order in dt and in the
    spacing; callers doing convergence studies should keep the outbreak
    away from the window edge.
    """
    sim = simulate_sir(state, dt, horizon)
    kernel, forcing, response = sir_to_kernel(state)
    fieldvals = solve_initial_value(kernel, forcing, response, state.grid,
                                    dt=dt, horizon=horizon)
    u_sir = sim.log_attack()
    u_int = fieldvals.values
    if u_sir.shape != u_int.shape:
        raise ValidationError(
            f"trajectory shapes diverged: {u_sir.shape} vs {u_int.shape}"
        )
    inner = state.grid.interior_indices(kernel.support_radius)
    return float(np.max(np.abs(u_sir[:, inner] - u_int[:, inner])))
