import numpy as np
import pytest

from beamsteer import (
    BeamState,
    ControlSignal,
    GramianSet,
    SteerWindow,
    SteeringProblem,
    alpha_sweep,
    apply_control_map,
    apply_semigroup,
    approximate_right_inverse_check,
    assemble_gramian,
    control_energy,
    energy_coords,
    energy_norm,
    laplacian_eigenvalues,
    solve_regularized,
    steer_linear,
    synthesize_control,
)
from beamsteer.errors import InvalidArgumentError

BETA = 2.0
WINDOW = SteerWindow(1.0, 0.2)


def _modes(n=8, length=1.0):
    return laplacian_eigenvalues(length, n)


def _random_state(modes, rng, scale=1.0):
    n = modes.count
    return BeamState(
        scale * rng.standard_normal(n) / modes.lambdas, scale * rng.standard_normal(n)
    )


def test_control_vanishes_on_free_trajectory_target():
    modes = _modes(4)
    rng = np.random.default_rng(0)
    y0 = _random_state(modes, rng)
    z1 = apply_semigroup(y0, WINDOW.delta, modes, BETA)
    control = synthesize_control(SteeringProblem(y0, z1, WINDOW, 1e-2), modes, BETA)
    assert np.abs(control.values).max() == 0.0
    assert np.abs(control.eta).max() == 0.0


def test_unit_deflection_target_energy_identity():
    # single mode, unit deflection target from rest
    modes = laplacian_eigenvalues(1.0, 1)
    y0 = BeamState.zeros(1)
    z1 = BeamState(np.array([1.0]), np.array([0.0]))
    gramians = assemble_gramian(modes, BETA, WINDOW)
    control = synthesize_control(
        SteeringProblem(y0, z1, WINDOW, 1e-4), modes, BETA, gramians=gramians
    )
    energy = control_energy(control, modes, BETA)
    assert np.isfinite(energy) and energy > 0
    quad_form = float(control.eta[0] @ gramians.blocks[0] @ control.eta[0])
    assert energy == pytest.approx(quad_form, rel=1e-8)
    # the mapped control agrees with Q eta evaluated independently
    mapped = apply_control_map(control, modes, BETA)
    np.testing.assert_allclose(mapped, (gramians.blocks @ control.eta[:, :, None])[:, :, 0], atol=1e-8)


def test_energy_identity_multimode():
    modes = _modes(8)
    rng = np.random.default_rng(1)
    y0 = _random_state(modes, rng)
    z1 = _random_state(modes, rng)
    gramians = assemble_gramian(modes, BETA, WINDOW)
    control = synthesize_control(
        SteeringProblem(y0, z1, WINDOW, 1e-3), modes, BETA, gramians=gramians
    )
    energy = control_energy(control, modes, BETA)
    quad_form = float(np.sum(control.eta[:, None, :] @ gramians.blocks @ control.eta[:, :, None]))
    assert energy == pytest.approx(quad_form, rel=1e-8)


def test_zero_control_is_free_flow():
    modes = _modes(5)
    rng = np.random.default_rng(2)
    y0 = _random_state(modes, rng)
    control = ControlSignal(WINDOW, np.zeros((5, 2)), modes, BETA)
    out = steer_linear(y0, control, modes, BETA)
    free = apply_semigroup(y0, WINDOW.delta, modes, BETA)
    assert energy_norm(out - free, modes) <= 1e-13


@pytest.mark.parametrize("alpha", [1.0, 1e-2, 1e-4])
def test_residual_identity_per_mode(alpha):
    modes = _modes(8)
    rng = np.random.default_rng(4)
    y0 = _random_state(modes, rng)
    z1 = _random_state(modes, rng)
    gramians = assemble_gramian(modes, BETA, WINDOW)
    control = synthesize_control(
        SteeringProblem(y0, z1, WINDOW, alpha), modes, BETA, gramians=gramians
    )
    y_tau = steer_linear(y0, control, modes, BETA)
    d = energy_coords(z1, modes) - energy_coords(
        apply_semigroup(y0, WINDOW.delta, modes, BETA), modes
    )
    expected = -alpha * solve_regularized(gramians, alpha, d)
    got = energy_coords(y_tau, modes) - energy_coords(z1, modes)
    np.testing.assert_allclose(got, expected, atol=1e-8)


def test_steering_linearity():
    modes = _modes(4)
    rng = np.random.default_rng(5)
    y0 = _random_state(modes, rng)
    u1 = synthesize_control(
        SteeringProblem(y0, _random_state(modes, rng), WINDOW, 1e-2), modes, BETA
    )
    u2 = synthesize_control(
        SteeringProblem(y0, _random_state(modes, rng), WINDOW, 1e-1), modes, BETA
    )
    left = steer_linear(y0, u1 + u2, modes, BETA)
    right = steer_linear(y0, u1, modes, BETA) + steer_linear(
        BeamState.zeros(4), u2, modes, BETA
    )
    assert energy_norm(left - right, modes) <= 1e-10


def test_alpha_sweep_decreasing_and_bounded():
    modes = _modes(8)
    rng = np.random.default_rng(6)
    y0 = _random_state(modes, rng)
    z1 = _random_state(modes, rng)
    alphas = [10.0**-k for k in range(7)]
    sweep = alpha_sweep(y0, z1, WINDOW, alphas, modes, BETA)
    errs = [e for _, e in sweep]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    gramians = assemble_gramian(modes, BETA, WINDOW)
    d = energy_coords(z1, modes) - energy_coords(
        apply_semigroup(y0, WINDOW.delta, modes, BETA), modes
    )
    d_norm = np.linalg.norm(d)
    q_min = gramians.min_eigenvalue
    for alpha, err in sweep:
        assert err <= alpha * d_norm / (alpha + q_min) + 1e-9


def test_alpha_monotone_per_block():
    modes = _modes(6)
    rng = np.random.default_rng(12)
    gramians = assemble_gramian(modes, BETA, WINDOW)
    d = rng.standard_normal((6, 2))
    prev = None
    for alpha in [1.0, 0.5, 1e-1, 1e-2, 1e-3, 1e-4]:
        per_block = np.linalg.norm(alpha * solve_regularized(gramians, alpha, d), axis=1)
        if prev is not None:
            assert np.all(per_block <= prev + 1e-12)
        prev = per_block


def test_alpha_sweep_zero_mismatch():
    modes = _modes(3)
    rng = np.random.default_rng(7)
    y0 = _random_state(modes, rng)
    z1 = apply_semigroup(y0, WINDOW.delta, modes, BETA)
    sweep = alpha_sweep(y0, z1, WINDOW, [1.0, 0.1, 0.01], modes, BETA)
    assert all(e == 0.0 for _, e in sweep)


def test_alpha_sweep_validation():
    modes = _modes(2)
    y0 = BeamState.zeros(2)
    z1 = BeamState.zeros(2)
    with pytest.raises(InvalidArgumentError):
        alpha_sweep(y0, z1, WINDOW, [], modes, BETA)
    with pytest.raises(InvalidArgumentError):
        alpha_sweep(y0, z1, WINDOW, [0.1, 0.5], modes, BETA)
    with pytest.raises(InvalidArgumentError):
        alpha_sweep(y0, z1, WINDOW, [2.0, 1.0], modes, BETA)


def test_right_inverse_identity_blocks():
    gset = GramianSet.from_blocks(np.broadcast_to(np.eye(2), (4, 2, 2)).copy())
    probe = np.full((4, 2), 0.5)
    report = approximate_right_inverse_check(gset, [1.0], probe)
    # with q = 1 and alpha = 1 the deviation is exactly half the probe norm
    assert report["errors"][0] == pytest.approx(0.5 * np.linalg.norm(probe), rel=1e-12)


def test_right_inverse_limit_and_ratio():
    modes = _modes(6)
    rng = np.random.default_rng(8)
    gset = assemble_gramian(modes, BETA, WINDOW)
    probe = rng.standard_normal((6, 2))
    alphas = [10.0**-k for k in range(7)]
    report = approximate_right_inverse_check(gset, alphas, probe)
    assert report["decreasing"]
    assert report["bound_ok"]
    for alpha, err in zip(report["alphas"], report["errors"]):
        assert err / alpha <= np.linalg.norm(probe) / gset.min_eigenvalue + 1e-9


def test_right_inverse_zero_probe():
    gset = GramianSet.from_blocks(np.broadcast_to(np.eye(2), (3, 2, 2)).copy())
    report = approximate_right_inverse_check(gset, [1.0, 0.5], np.zeros((3, 2)))
    assert report["errors"] == [0.0, 0.0]


def test_auxiliary_signal_error_formula():
    # general control sequence with auxiliary window term v:
    # G u = d - alpha (alpha I + Q)^{-1} (d - G v)
    modes = _modes(4)
    rng = np.random.default_rng(9)
    y0 = _random_state(modes, rng)
    z1 = _random_state(modes, rng)
    alpha = 1e-2
    gramians = assemble_gramian(modes, BETA, WINDOW)
    v_coeffs = rng.standard_normal(4)
    v = lambda t: v_coeffs
    control = synthesize_control(
        SteeringProblem(y0, z1, WINDOW, alpha), modes, BETA, gramians=gramians, extra=v
    )
    d = energy_coords(z1, modes) - energy_coords(
        apply_semigroup(y0, WINDOW.delta, modes, BETA), modes
    )
    from beamsteer.steering import _window_integral_of

    g_v = _window_integral_of(v, WINDOW, modes, BETA)
    mapped = apply_control_map(control, modes, BETA)
    expected = d - alpha * solve_regularized(gramians, alpha, d - g_v)
    np.testing.assert_allclose(mapped, expected, atol=1e-8)


def test_problem_validation():
    modes = _modes(2)
    y0 = BeamState.zeros(2)
    with pytest.raises(InvalidArgumentError):
        SteeringProblem(y0, y0, WINDOW, 0.0)
    with pytest.raises(InvalidArgumentError):
        SteeringProblem(y0, y0, WINDOW, 1.5)
    with pytest.raises(InvalidArgumentError):
        synthesize_control(
            SteeringProblem(y0, y0, SteerWindow(1.0, 0.0), 0.5), modes, BETA
        )


def test_control_cache_grid():
    modes = _modes(3)
    rng = np.random.default_rng(10)
    control = synthesize_control(
        SteeringProblem(_random_state(modes, rng), _random_state(modes, rng), WINDOW, 1e-2),
        modes,
        BETA,
    )
    assert control.times[0] == pytest.approx(WINDOW.start)
    assert control.times[-1] == pytest.approx(WINDOW.tau)
    assert control.times.size == 256
    assert np.all(np.isfinite(control.values))
    # cached samples agree with the exact evaluation
    np.testing.assert_allclose(
        control.values, control.window_coeffs(control.times), rtol=1e-14
    )
