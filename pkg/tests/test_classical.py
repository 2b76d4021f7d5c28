import numpy as np
import pytest

from torus_holonomy import (
    ActionPolynomial,
    CirclePath,
    ClassicalState,
    ControlConnection,
    ParameterPolynomial,
    SplitViolationError,
    TorusModel,
    WaypointPath,
    classical_action_transport,
    classical_mode_transport,
    evolve_free,
    evolve_perturbed,
    reparameterize,
    split_residual,
)
from torus_holonomy.classical import _rk4_step


def _const_connection(m: int, axis: int, kappa: float, d: int = 1) -> ControlConnection:
    zero = (0,) * m
    return ControlConnection(m, d, {(axis, 0): {zero: ParameterPolynomial(d, {(0,) * d: kappa})}})


def _cos_connection(amplitude: float) -> ControlConnection:
    return ControlConnection.from_half_spectrum(
        1, 1, {(0, 0): {(1,): ParameterPolynomial(1, {(0,): amplitude / 2.0})}}
    )


# --- free flow ---------------------------------------------------------------


def test_free_flow_quadratic():
    # H = I^2/2 at I=2: angle advances by I*t
    ham = ActionPolynomial(1, {(2,): 0.5})
    s0 = ClassicalState([2.0], [0.0])
    s1 = evolve_free(ham, s0, 1.0)
    assert s1.actions[0] == 2.0
    assert s1.angles[0] == pytest.approx(2.0)


def test_free_flow_identity_at_t0():
    ham = ActionPolynomial(2, {(0, 2): 0.5})
    s0 = ClassicalState([0.3, -1.2], [0.4, 2.5])
    s1 = evolve_free(ham, s0, 0.0)
    assert np.array_equal(s1.actions, s0.actions)
    assert np.array_equal(s1.angles, s0.angles)


def test_free_flow_unused_axis_constant():
    ham = ActionPolynomial(2, {(0, 2): 0.5})  # independent of I_0
    s0 = ClassicalState([0.7, 1.0], [0.1, 0.2])
    s1 = evolve_free(ham, s0, 3.0)
    assert s1.angles[0] == s0.angles[0]
    assert s1.angles[1] == pytest.approx(0.2 + 3.0)


# --- perturbed flow ----------------------------------------------------------


def test_perturbed_reduces_to_free_without_connection():
    ham = ActionPolynomial(1, {(2,): 0.5})
    conn = ControlConnection.empty(1, 1)
    curve = WaypointPath(((0.0,), (1.0,)), 2.0)
    s0 = ClassicalState([1.5], [0.3])
    traj = evolve_perturbed(ham, conn, curve, s0, 16)
    for i, t in enumerate(traj.times):
        free = evolve_free(ham, s0, float(t))
        assert np.allclose(traj.actions[i], free.actions, atol=1e-13)
        assert np.allclose(traj.angles[i], free.angles, atol=1e-12)


def test_perturbed_constant_drift_closed_form():
    # constant component kappa along a straight run of net displacement D:
    # angle gains grad H * T + kappa * D, actions stay put.
    kappa, displacement = 0.45, 2.0
    ham = ActionPolynomial(1, {(2,): 0.5})
    conn = _const_connection(1, 0, kappa)
    curve = WaypointPath(((0.0,), (displacement,)), 3.0)
    s0 = ClassicalState([1.2], [0.7])
    traj = evolve_perturbed(ham, conn, curve, s0, 600)
    final = traj.final
    assert final.actions[0] == pytest.approx(1.2, abs=1e-12)
    expected = 0.7 + 1.2 * 3.0 + kappa * displacement
    assert final.angles[0] == pytest.approx(expected, abs=1e-10)


def test_perturbed_step_refinement_order():
    ham = ActionPolynomial(1, {(2,): 0.5})
    conn = _cos_connection(0.8)
    curve = WaypointPath(((0.0,), (1.0,)), 1.0)
    s0 = ClassicalState([0.9], [0.2])
    ref = evolve_perturbed(ham, conn, curve, s0, 5120).final
    errors = []
    for steps in (40, 80, 160):
        fin = evolve_perturbed(ham, conn, curve, s0, steps).final
        errors.append(
            max(
                np.max(np.abs(fin.actions - ref.actions)),
                np.max(np.abs(fin.angles - ref.angles)),
            )
        )
    orders = [np.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
    assert min(orders) >= 3.5


def test_trajectory_times_strictly_increasing():
    ham = ActionPolynomial(1, {(1,): 1.0})
    conn = ControlConnection.empty(1, 1)
    curve = WaypointPath(((0.0,), (1.0,)), 1.0)
    traj = evolve_perturbed(ham, conn, curve, ClassicalState([0.0], [0.0]), 10)
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj) == 11


# --- split residual ----------------------------------------------------------


def test_split_residual_compliant():
    model = TorusModel(2, (0,), (0.0, 0.0), 4)
    ham = ActionPolynomial(2, {(0, 2): 0.5})
    conn = _cos_connection(0.3)  # m=1; rebuild on 2 axes
    conn2 = ControlConnection.from_half_spectrum(
        2, 1, {(0, 0): {(1, 0): ParameterPolynomial(1, {(0,): 0.15})}}
    )
    assert split_residual(model, ham, conn2) == 0


def test_split_residual_detects_hamiltonian_violation():
    model = TorusModel(2, (0,), (0.0, 0.0), 4)
    ham = ActionPolynomial(2, {(1, 1): 1.0})  # touches controlled axis 0
    assert split_residual(model, ham, ControlConnection.empty(2, 1)) >= 1


def test_split_residual_detects_connection_violations():
    model = TorusModel(2, (0,), (0.0, 0.0), 4)
    ham = ActionPolynomial.zero(2)
    on_dynamic_axis = ControlConnection.from_half_spectrum(
        2, 1, {(1, 0): {(0, 0): ParameterPolynomial(1, {(0,): 1.0})}}
    )
    assert split_residual(model, ham, on_dynamic_axis) >= 1
    dynamic_angle_mode = ControlConnection.from_half_spectrum(
        2, 1, {(0, 0): {(0, 1): ParameterPolynomial(1, {(0,): 1.0})}}
    )
    assert split_residual(model, ham, dynamic_angle_mode) >= 1


# --- mode transport ----------------------------------------------------------


def test_mode_transport_zero_mode_constant():
    model = TorusModel(1, (0,), (0.0,), 4)
    conn = _cos_connection(0.5)
    curve = WaypointPath(((0.0,), (1.0,)), 1.0)
    result = classical_mode_transport(model, conn, curve, [0.3], 200)
    i0 = [tuple(r) for r in result.modes].index((0,))
    assert result.direct[i0] == pytest.approx(1.0)
    assert result.ordered[i0] == pytest.approx(1.0, abs=1e-12)


def test_mode_transport_constant_component_closed_form():
    # kappa constant: psi_n(T) = exp(i n (phi0 + kappa * displacement)) for
    # every mode, both routes, no truncation loss.
    model = TorusModel(1, (0,), (0.0,), 6)
    kappa, displacement, phi0 = 0.7, 2.0, 0.3
    conn = _const_connection(1, 0, kappa)
    curve = WaypointPath(((0.0,), (displacement,)), 1.0)
    result = classical_mode_transport(model, conn, curve, [phi0], 200, guard=0)
    expected = np.exp(1j * result.modes[:, 0] * (phi0 + kappa * displacement))
    assert np.max(np.abs(result.direct - expected)) < 1e-12
    assert np.max(np.abs(result.ordered - expected)) < 1e-12


def test_mode_transport_two_routes_agree_on_interior():
    model = TorusModel(1, (0,), (0.0,), 8)
    conn = ControlConnection.from_half_spectrum(
        1, 1, {(0, 0): {(1,): ParameterPolynomial(1, {(0,): 0.05, (1,): 0.02})}}
    )
    curve = WaypointPath(((0.0,), (1.0,)), 1.0)
    result = classical_mode_transport(model, conn, curve, [0.4], 4000, guard=6)
    assert result.discrepancy <= 1e-6


def test_mode_transport_consistency_improves_with_steps():
    # two harmonics with different sigma-weights: the ordered-product factors
    # stop commuting, so the route discrepancy is discretization-dominated at
    # coarse steps and falls at second order until the truncation floor.
    model = TorusModel(1, (0,), (0.0,), 8)
    conn = ControlConnection.from_half_spectrum(
        1,
        2,
        {
            (0, 0): {(1,): ParameterPolynomial(2, {(0, 0): 0.05, (0, 1): 0.03})},
            (0, 1): {(1,): ParameterPolynomial(2, {(0, 0): 0.02j, (1, 0): 0.03})},
        },
    )
    curve = CirclePath.circle((0.0, 0.0), 1.0, 1.0)
    coarse = classical_mode_transport(model, conn, curve, [0.4], 50, guard=6)
    fine = classical_mode_transport(model, conn, curve, [0.4], 400, guard=6)
    assert fine.discrepancy < coarse.discrepancy / 16


def test_mode_transport_requires_split():
    model = TorusModel(2, (0,), (0.0, 0.0), 4)
    bad = ControlConnection.from_half_spectrum(
        2, 1, {(1, 0): {(0, 0): ParameterPolynomial(1, {(0,): 1.0})}}
    )
    with pytest.raises(SplitViolationError):
        classical_mode_transport(model, bad, WaypointPath(((0.0,), (1.0,)), 1.0), [0.0, 0.0][:1], 10)


# --- action transport ---------------------------------------------------------


def test_action_transport_angle_independent_is_constant():
    model = TorusModel(1, (0,), (0.0,), 4)
    conn = _const_connection(1, 0, 0.9)
    curve = WaypointPath(((0.0,), (1.5,)), 1.0)
    transport = classical_mode_transport(model, conn, curve, [0.2], 100)
    final = classical_action_transport(model, conn, curve, [1.3], transport.phi_history, 100)
    assert final[0] == pytest.approx(1.3, abs=1e-14)


def test_action_transport_matches_direct_rk4():
    # one controlled axis, sin(phi) component: cross-check the ordered
    # product against direct RK4 of the coupled action-angle system.
    model = TorusModel(1, (0,), (0.0,), 4)
    amplitude = 0.6
    conn = ControlConnection.from_half_spectrum(
        1, 1, {(0, 0): {(1,): ParameterPolynomial(1, {(0,): -0.5j * amplitude})}}
    )  # sin(phi^0) * amplitude
    curve = WaypointPath(((0.0,), (1.0,)), 1.0)
    steps = 2000
    transport = classical_mode_transport(model, conn, curve, [0.7], steps)
    final = classical_action_transport(model, conn, curve, [1.1], transport.phi_history, steps)

    def rhs(t, y):
        I, phi = y
        sigma, vel = curve.point(t), curve.velocity(t)
        lam = conn.field(0, 0, sigma)
        return np.array(
            [-lam.derivative(0).evaluate_real([phi]) * I * vel[0], lam.evaluate_real([phi]) * vel[0]]
        )

    y = np.array([1.1, 0.7])
    times = np.linspace(0.0, 1.0, steps + 1)
    for t0, t1 in zip(times[:-1], times[1:]):
        y = _rk4_step(rhs, float(t0), float(t1), y)
    assert final[0] == pytest.approx(y[0], abs=1e-6)


def test_action_transport_reversal_returns_start():
    model = TorusModel(1, (0,), (0.0,), 4)
    conn = _cos_connection(0.5)
    curve = CirclePath.circle((0.0, 0.0), 1.0, 1.0)
    conn2 = ControlConnection.from_half_spectrum(
        1, 2, {(0, 0): {(1,): ParameterPolynomial(2, {(0, 0): 0.25})}}
    )
    steps = 500
    forward = classical_mode_transport(model, conn2, curve, [0.3], steps)
    mid = classical_action_transport(model, conn2, curve, [0.8], forward.phi_history, steps)
    back = classical_action_transport(
        model, conn2, curve.reverse(), mid, forward.phi_history[::-1], steps
    )
    assert back[0] == pytest.approx(0.8, abs=1e-8)


# --- reparameterization invariance --------------------------------------------


def test_classical_reparameterization_invariance_full_state():
    # with H = 0 the whole final state is a function of the traced path only
    ham = ActionPolynomial.zero(1)
    conn = _cos_connection(0.5)
    base = WaypointPath(((0.0,), (1.0,)), 1.0)
    warped = reparameterize(base, lambda t: t**2, lambda t: 2 * t, 1.0)
    s0 = ClassicalState([0.8], [0.1])
    a = evolve_perturbed(ham, conn, base, s0, 2000).final
    b = evolve_perturbed(ham, conn, warped, s0, 2000).final
    assert np.allclose(a.actions, b.actions, atol=1e-8)
    assert np.allclose(a.angles, b.angles, atol=1e-8)


def test_classical_reparameterization_invariance_controlled_block():
    # with H != 0 only the controlled block is path-only; the dynamic angle
    # keeps winding with wall-clock time.
    model = TorusModel(2, (0,), (0.0, 0.0), 4)
    ham = ActionPolynomial(2, {(0, 2): 0.5})
    conn = ControlConnection.from_half_spectrum(
        2, 1, {(0, 0): {(1, 0): ParameterPolynomial(1, {(0,): 0.2})}}
    )
    base = WaypointPath(((0.0,), (1.0,)), 1.0)
    warped = reparameterize(base, lambda t: t**2, lambda t: 2 * t, 1.0)
    s0 = ClassicalState([0.5, 1.0], [0.0, 0.0])
    a = evolve_perturbed(ham, conn, base, s0, 2000).final
    b = evolve_perturbed(ham, conn, warped, s0, 2000).final
    ctrl = list(model.controlled)
    assert np.allclose(a.actions[ctrl], b.actions[ctrl], atol=1e-8)
    assert np.allclose(a.angles[ctrl], b.angles[ctrl], atol=1e-8)
    # dynamic block agrees here because duration matches; actions do regardless
    assert np.allclose(a.actions, b.actions, atol=1e-8)
