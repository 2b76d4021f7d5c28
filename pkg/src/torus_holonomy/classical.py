"""Classical dynamics: free flow, perturbed flow, and path-ordered transport.

The free system conserves actions and winds angles linearly; it is solved in
closed form.  The perturbed system couples actions and angles through the
control connection and the parameter velocity:

    dI_k/dt   = - sum_b d_k L_b_beta(sigma, phi) I_b  dsigma^beta/dt
    dphi^k/dt =   grad_k H(I) + L_k_beta(sigma, phi)  dsigma^beta/dt

and is integrated with fixed-step classical RK4 (deterministic, clean
convergence order).  Under the controlled/dynamic split the controlled
block decouples; its angle equation is equivalent to a countable linear
system for the mode values exp(i n . phi), solved here both directly and as
an ordered product of midpoint exponentials so the two routes can be
cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .curves import ParameterCurve, step_intervals
from .errors import DimensionMismatchError, SplitViolationError
from .fields import ActionPolynomial, ControlConnection
from .lattice import ClassicalState, TorusModel, _mode_array


@dataclass(frozen=True)
class Trajectory:
    """Sampled classical evolution; times are strictly increasing."""

    times: np.ndarray
    actions: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        actions = np.asarray(self.actions, dtype=float)
        angles = np.asarray(self.angles, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if actions.shape != angles.shape or actions.shape[0] != times.shape[0]:
            raise DimensionMismatchError("inconsistent trajectory arrays")
        for arr in (times, actions, angles):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "angles", angles)

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, i: int) -> ClassicalState:
        return ClassicalState(self.actions[i], self.angles[i])

    @property
    def final(self) -> ClassicalState:
        return self.state(len(self) - 1)


def evolve_free(hamiltonian: ActionPolynomial, state: ClassicalState, t: float) -> ClassicalState:
    """Closed-form free flow: actions constant, angles wind at grad H(I)."""
    if hamiltonian.m != state.m:
        raise DimensionMismatchError("Hamiltonian and state dimensions differ")
    omega = hamiltonian.gradient(state.actions)
    return ClassicalState(state.actions, state.angles + t * omega)


def _perturbed_rhs(hamiltonian, connection, curve):
    m = hamiltonian.m

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        actions, angles = y[:m], y[m:]
        sigma = curve.point(t)
        vel = curve.velocity(t)
        dI = np.zeros(m)
        dphi = hamiltonian.gradient(actions)
        for (axis, beta), _ in sorted(connection.components.items()):
            v = vel[beta]
            if v == 0.0:
                continue
            fld = connection.field(axis, beta, sigma)
            dphi[axis] += fld.evaluate_real(angles) * v
            for k in fld.angle_axes():
                dI[k] -= fld.derivative(k).evaluate_real(angles) * actions[axis] * v
        return np.concatenate([dI, dphi])

    return rhs


def _rk4_step(rhs, t0: float, t1: float, y: np.ndarray) -> np.ndarray:
    h = t1 - t0
    k1 = rhs(t0, y)
    k2 = rhs(t0 + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t0 + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t1, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_perturbed(
    hamiltonian: ActionPolynomial,
    connection: ControlConnection,
    curve: ParameterCurve,
    state0: ClassicalState,
    steps: int,
) -> Trajectory:
    """Fixed-step RK4 trajectory of the perturbed system, steps+1 samples.

    The step grid is aligned with the curve's breakpoints.  No split
    assumption is made here; with a split-compliant connection the dynamic
    block reproduces the free flow to integrator accuracy.
    """
    m = hamiltonian.m
    if state0.m != m or connection.m != m:
        raise DimensionMismatchError("dimension mismatch between Hamiltonian, connection, state")
    if curve.dimension != connection.parameter_dim:
        raise DimensionMismatchError("curve dimension differs from connection parameter dimension")
    rhs = _perturbed_rhs(hamiltonian, connection, curve)
    times = step_intervals(curve, steps)
    ys = np.empty((len(times), 2 * m))
    ys[0] = np.concatenate([state0.actions, state0.angles])
    for i in range(len(times) - 1):
        ys[i + 1] = _rk4_step(rhs, float(times[i]), float(times[i + 1]), ys[i])
    return Trajectory(times, ys[:, :m], ys[:, m:])


def split_residual(
    model: TorusModel, hamiltonian: ActionPolynomial, connection: ControlConnection
) -> int:
    """Count of structural violations of the controlled/dynamic split.

    Zero iff the Hamiltonian touches no controlled action and the connection
    lives entirely on controlled axes (component index and Fourier support).
    """
    if hamiltonian.m != model.m or connection.m != model.m:
        raise DimensionMismatchError("model dimension mismatch")
    controlled = set(model.controlled)
    violations = 0
    for e in hamiltonian.terms:
        if any(e[a] > 0 for a in controlled):
            violations += 1
    for (axis, _), fourier in connection.components.items():
        if axis not in controlled:
            violations += 1
        for c in fourier:
            if any(x != 0 for k, x in enumerate(c) if k not in controlled):
                violations += 1
    return violations


def require_split(
    model: TorusModel,
    hamiltonian: ActionPolynomial | None,
    connection: ControlConnection | None,
) -> None:
    h = hamiltonian if hamiltonian is not None else ActionPolynomial.zero(model.m)
    c = connection if connection is not None else ControlConnection.empty(model.m, 1)
    n = split_residual(model, h, c)
    if n:
        raise SplitViolationError(f"{n} structural violation(s) of the controlled/dynamic split")


@dataclass(frozen=True)
class ModeTransport:
    """Two solutions of the controlled-angle transport on the mode box.

    ``direct`` exponentiates the integrated angle; ``ordered`` is the
    ordered-product solution of the equivalent countable linear system,
    truncated to the box.  Truncation contaminates the ordered route from
    the boundary inward (roughly factorially damped with depth), so the
    reported discrepancy is taken over modes at least ``guard`` sites from
    the boundary.  ``phi_history`` holds the controlled angles at half-step
    resolution (2*steps+1 samples) for reuse by the action transport.
    """

    modes: np.ndarray
    direct: np.ndarray
    ordered: np.ndarray
    discrepancy: float
    guard: int
    times: np.ndarray
    phi_history: np.ndarray

    def final_angles(self) -> np.ndarray:
        return self.phi_history[-1]


def _controlled_setup(model: TorusModel, connection: ControlConnection) -> ControlConnection:
    require_split(model, None, connection)
    return connection.restricted(model.controlled)


def _angle_rhs(sub: ControlConnection, curve: ParameterCurve):
    def rhs(t: float, phi: np.ndarray) -> np.ndarray:
        sigma = curve.point(t)
        vel = curve.velocity(t)
        dphi = np.zeros(sub.m)
        for (axis, beta), _ in sorted(sub.components.items()):
            v = vel[beta]
            if v == 0.0:
                continue
            dphi[axis] += sub.field(axis, beta, sigma).evaluate_real(phi) * v
        return dphi

    return rhs


def _half_step_angles(sub, curve, phi0: np.ndarray, steps: int):
    """RK4 angle history at half-step resolution: 2*steps+1 samples."""
    times = step_intervals(curve, steps)
    half_times = np.empty(2 * steps + 1)
    half_times[::2] = times
    half_times[1::2] = 0.5 * (times[:-1] + times[1:])
    rhs = _angle_rhs(sub, curve)
    phis = np.empty((2 * steps + 1, sub.m))
    phis[0] = phi0
    for i in range(2 * steps):
        phis[i + 1] = _rk4_step(rhs, float(half_times[i]), float(half_times[i + 1]), phis[i])
    return times, half_times, phis


def classical_mode_transport(
    model: TorusModel,
    connection: ControlConnection,
    curve: ParameterCurve,
    phi0,
    steps: int,
    guard: int | None = None,
) -> ModeTransport:
    """Transport mode values exp(i n . phi) over the controlled box, two ways.

    ``phi0`` lists the initial controlled angles (ordered by controlled
    axis).  Route one integrates the angle equation and exponentiates;
    route two propagates the truncated linear mode system with per-step
    exponentials of the midpoint generator.  Both use the same step grid.
    """
    sub = _controlled_setup(model, connection)
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != (sub.m,):
        raise DimensionMismatchError(f"expected {sub.m} controlled angles, got {phi0.shape}")
    if guard is None:
        guard = model.truncation // 2
    if not 0 <= guard <= model.truncation:
        raise ValueError("guard must lie in [0, truncation]")

    times, _, phis = _half_step_angles(sub, curve, phi0, steps)
    modes = _mode_array(sub.m, model.truncation)
    direct = np.exp(1j * (modes @ phis[-1]))

    size = modes.shape[0]
    shape = (2 * model.truncation + 1,) * sub.m
    psi = np.exp(1j * (modes @ phi0))
    for i in range(steps):
        t0, t1 = float(times[i]), float(times[i + 1])
        dt = t1 - t0
        tm = 0.5 * (t0 + t1)
        sigma = curve.point(tm)
        vel = curve.velocity(tm)
        # d/dt psi_n = i sum_c (n . L_c) psi_{n+c}: mode n is fed by mode n+c
        # with a weight indexed by the receiving mode; feeds from outside the
        # box are dropped (the documented truncation loss).
        gen = np.zeros((size, size), dtype=complex)
        for (axis, beta), fourier in sorted(sub.components.items()):
            v = vel[beta]
            if v == 0.0:
                continue
            for c, poly in sorted(fourier.items()):
                weight = poly.evaluate(sigma) * v
                source = modes + np.asarray(c)
                ok = np.all(np.abs(source) <= model.truncation, axis=1)
                if not ok.any():
                    continue
                rows = np.ravel_multi_index((modes[ok] + model.truncation).T, shape)
                cols = np.ravel_multi_index((source[ok] + model.truncation).T, shape)
                gen[rows, cols] += weight * modes[ok, axis]
        psi = expm(1j * dt * gen) @ psi

    keep = np.all(np.abs(modes) <= model.truncation - guard, axis=1)
    discrepancy = float(np.max(np.abs(direct[keep] - psi[keep]))) if keep.any() else 0.0
    return ModeTransport(modes, direct, psi, discrepancy, guard, times, phis)


def classical_action_transport(
    model: TorusModel,
    connection: ControlConnection,
    curve: ParameterCurve,
    actions0,
    phi_history: np.ndarray,
    steps: int,
) -> np.ndarray:
    """Ordered-product solution of the controlled-action transport.

    ``dI_a/dt = - sum_b d_a L_b_beta(sigma, phi(t)) I_b dsigma^beta/dt``
    along a given controlled-angle history (half-step resolution, as
    produced by :func:`classical_mode_transport`).  Returns the final
    controlled actions.
    """
    sub = _controlled_setup(model, connection)
    actions = np.asarray(actions0, dtype=float).copy()
    phi_history = np.asarray(phi_history, dtype=float)
    if actions.shape != (sub.m,):
        raise DimensionMismatchError(f"expected {sub.m} controlled actions")
    if phi_history.shape != (2 * steps + 1, sub.m):
        raise DimensionMismatchError("phi_history must hold 2*steps+1 controlled-angle samples")
    times = step_intervals(curve, steps)
    for i in range(steps):
        t0, t1 = float(times[i]), float(times[i + 1])
        dt = t1 - t0
        tm = 0.5 * (t0 + t1)
        phim = phi_history[2 * i + 1]
        sigma = curve.point(tm)
        vel = curve.velocity(tm)
        gen = np.zeros((sub.m, sub.m))
        for (axis, beta), _ in sorted(sub.components.items()):
            v = vel[beta]
            if v == 0.0:
                continue
            fld = sub.field(axis, beta, sigma)
            for a in fld.angle_axes():
                gen[a, axis] += fld.derivative(a).evaluate_real(phim) * v
        actions = expm(-dt * gen) @ actions
    return actions
