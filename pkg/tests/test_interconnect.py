import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import brentq

from passive_gd.errors import (
    AlgebraicLoopError,
    ContractionError,
    InvalidParameterError,
    ShapeError,
)
from passive_gd.functions import (
    SectorFunction,
    diag_quadratic,
    oscillatory,
    quadratic,
    shifted_gradient,
)
from passive_gd.interconnect import (
    FeedbackLoop,
    delta_bar_operator,
    evaluate_delta_bar,
    loop_equivalence_report,
    run_transformed,
    run_untransformed,
)
from passive_gd.lti import gd_realization, modified_gd_realization
from passive_gd.signals import Signal


def _zero_loop(controller, f, xi0, steps):
    return FeedbackLoop.with_zero_inputs(controller, f, xi0, steps)


def test_untransformed_one_step_convergence():
    # alpha = 1/L drives a quadratic to its minimizer in one step.
    loop = _zero_loop(gd_realization(0.01), quadratic(100.0), np.array([1.0]), 3)
    trace = run_untransformed(loop, 3)
    assert_allclose(trace.states.samples[:3], [[1.0], [0.0], [0.0]], atol=1e-15)


def test_untransformed_zero_equilibrium():
    loop = _zero_loop(gd_realization(0.02), quadratic(100.0), np.zeros(1), 5)
    trace = run_untransformed(loop, 5)
    for sig in (trace.u1, trace.y1, trace.u2, trace.y2):
        assert_allclose(sig.samples, np.zeros((5, 1)))
    assert_allclose(trace.states.samples, np.zeros((6, 1)))


def test_untransformed_oscillation_at_double_step():
    loop = _zero_loop(gd_realization(0.02), quadratic(100.0), np.array([1.0]), 6)
    trace = run_untransformed(loop, 6)
    expected = [[(-1.0) ** k] for k in range(7)]
    assert_allclose(trace.states.samples, expected, atol=1e-14)


def test_untransformed_rejects_feedthrough():
    loop = _zero_loop(
        modified_gd_realization(0.02, 0.01), quadratic(100.0), np.zeros(1), 3
    )
    with pytest.raises(AlgebraicLoopError):
        run_untransformed(loop, 3)


def test_untransformed_wiring_identities():
    rng = np.random.default_rng(6)
    f = oscillatory(1.0, 100.0)
    loop = FeedbackLoop(
        controller=gd_realization(0.01),
        function=f,
        r1=Signal(rng.standard_normal((10, 1))),
        r2=Signal(rng.standard_normal((10, 1))),
        xi0=rng.standard_normal(1),
    )
    trace = run_untransformed(loop, 10)
    assert_allclose(
        trace.u1.samples, loop.r1.samples[:10] - trace.y2.samples, atol=1e-12
    )
    assert_allclose(
        trace.u2.samples, loop.r2.samples[:10] + trace.y1.samples, atol=1e-12
    )
    for k in range(10):
        assert_allclose(
            trace.y2.samples[k],
            shifted_gradient(f, trace.u2.samples[k]),
            atol=1e-12,
        )


def test_delta_bar_zero_fixed_point():
    for f in (oscillatory(1.0, 100.0), quadratic(100.0)):
        y = evaluate_delta_bar(f, 0.005, np.zeros(f.dim))
        assert_allclose(y, np.zeros(f.dim), atol=1e-15)


def test_delta_bar_linear_closed_form():
    # y = 100(u + 0.005 y) has solution y = 200 u.
    y = evaluate_delta_bar(quadratic(100.0), 0.005, np.array([1.0]))
    assert y[0] == pytest.approx(200.0, rel=1e-11)


def test_delta_bar_against_bisection_oracle():
    f = oscillatory(1.0, 100.0)
    d = 0.005
    for u in (0.3, -0.7, 1.2):
        y = evaluate_delta_bar(f, d, np.array([u]), tol=1e-13)
        root = brentq(
            lambda t: t - f.gradient(np.array([u + d * t]))[0],
            -1000.0,
            1000.0,
            xtol=1e-13,
        )
        assert y[0] == pytest.approx(root, abs=1e-9)
        residual = abs(y[0] - f.gradient(np.array([u + d * y[0]]))[0])
        assert residual <= 1e-11


def test_delta_bar_contraction_violation():
    with pytest.raises(ContractionError):
        evaluate_delta_bar(quadratic(100.0), 0.01, np.array([1.0]))
    with pytest.raises(ContractionError):
        evaluate_delta_bar(quadratic(100.0), 0.02, np.array([1.0]))


def test_delta_bar_iteration_count_bound():
    calls = {"n": 0}
    base = quadratic(50.0)

    def counting_gradient(x):
        calls["n"] += 1
        return 50.0 * np.asarray(x, dtype=float)

    f = SectorFunction(
        dim=1, m=50.0, L=50.0, minimizer=np.zeros(1),
        value=base.value, gradient=counting_gradient,
    )
    d = 0.01  # d*L = 0.5
    tol = 1e-12
    calls["n"] = 0
    y = evaluate_delta_bar(f, d, np.array([2.0]), tol=tol)
    iterations = calls["n"] - 1  # first call produces the starting point
    y0 = abs(50.0 * 2.0)
    bound = int(np.ceil(np.log(tol / y0) / np.log(d * 50.0))) + 1
    assert iterations <= bound + 1
    assert y[0] == pytest.approx(200.0, rel=1e-11)


def test_delta_bar_operator_applies_per_sample():
    f = quadratic(100.0)
    op = delta_bar_operator(f, 0.005)
    u = Signal(np.array([[1.0], [2.0], [-0.5]]))
    y = op(u)
    assert_allclose(y.samples, 200.0 * u.samples, rtol=1e-10)


def test_run_transformed_matches_untransformed_for_quadratic():
    f = quadratic(100.0)
    x0 = np.array([1.0])
    loop = _zero_loop(gd_realization(0.01), f, x0.copy(), 20)
    plain = run_untransformed(loop, 20)
    transformed = run_transformed(f, 0.01, 0.005, x0, 20)
    assert_allclose(
        transformed.states.samples, plain.states.samples, atol=1e-11
    )


def test_run_transformed_stationary_at_minimizer():
    f = oscillatory(1.0, 100.0)
    trace = run_transformed(f, 0.01, 0.005, np.zeros(1), 10)
    assert_allclose(trace.states.samples, np.zeros((11, 1)), atol=1e-14)


def test_run_transformed_requires_halfstep_feedthrough():
    with pytest.raises(InvalidParameterError):
        run_transformed(quadratic(100.0), 0.01, 0.004, np.array([1.0]), 5)


def test_run_transformed_wiring_identities():
    f = oscillatory(1.0, 100.0)
    trace = run_transformed(f, 0.012, 0.006, np.array([3.0]), 30)
    r1 = np.zeros((30, 1))
    r2_bar = np.zeros((30, 1))
    assert_allclose(trace.u1.samples, r1 - trace.y2.samples, atol=1e-12)
    assert_allclose(
        trace.u2.samples, r2_bar + trace.y1.samples, atol=1e-12
    )


def test_run_transformed_wiring_with_exogenous_inputs():
    rng = np.random.default_rng(33)
    f = oscillatory(1.0, 100.0)
    d = 0.004
    r1 = Signal(rng.standard_normal((25, 1)))
    r2 = Signal(rng.standard_normal((25, 1)))
    trace = run_transformed(f, 2 * d, d, np.array([1.5]), 25, r1=r1, r2=r2)
    r2_bar = r2.samples[:25] - d * r1.samples[:25]
    assert_allclose(trace.u1.samples, r1.samples[:25] - trace.y2.samples, atol=1e-12)
    assert_allclose(trace.u2.samples, r2_bar + trace.y1.samples, atol=1e-12)
    # Controller relations: y1 = xi + d*u1 and xi' = xi + alpha*u1.
    xi = trace.states.samples
    assert_allclose(trace.y1.samples, xi[:-1] + d * trace.u1.samples, atol=1e-12)
    assert_allclose(xi[1:], xi[:-1] + 2 * d * trace.u1.samples, atol=1e-12)


def test_loop_equivalence_examples():
    assert loop_equivalence_report(
        quadratic(100.0), 0.01, np.array([7.0]), 100
    ) <= 1e-9
    assert loop_equivalence_report(
        oscillatory(1.0, 100.0), 0.01, np.array([5.0]), 50
    ) <= 1e-9
    assert loop_equivalence_report(quadratic(100.0), 0.02, np.zeros(1), 50) == 0.0
    # Boundary step size: x2 never converges, equivalence is still algebraic.
    assert loop_equivalence_report(
        diag_quadratic(1.0, 100.0), 0.02, np.array([1.0, 1.0]), 100
    ) <= 1e-9


def test_run_transformed_boundary_nonquadratic_small_amplitude():
    # d*L = 1 without a constant Hessian exercises the damped iteration.
    f = oscillatory(1.0, 100.0)
    x0 = np.array([0.05])
    trace = run_transformed(f, 0.02, 0.01, x0, 10)
    x = x0.copy()
    for k in range(11):
        assert np.linalg.norm(trace.states.samples[k] - x) <= 1e-9
        x = x - 0.02 * np.asarray(f.gradient(x))


def test_loop_equivalence_large_amplitude():
    f = oscillatory(1.0, 100.0)
    rng = np.random.default_rng(21)
    for _ in range(5):
        alpha = float(rng.uniform(0.05, 0.95)) * 2.0 / f.L
        x0 = rng.uniform(-5e4, 5e4, 1)
        dev = loop_equivalence_report(f, alpha, x0, 100)
        assert dev <= 1e-9 * (1.0 + np.linalg.norm(x0))


def test_transformation_invariance_random_configs():
    rng = np.random.default_rng(8)
    for f in (quadratic(100.0), diag_quadratic(1.0, 100.0), oscillatory(1.0, 100.0)):
        for _ in range(5):
            alpha = float(rng.uniform(0.05, 0.95)) * 2.0 / f.L
            x0 = rng.uniform(-50.0, 50.0, f.dim)
            dev = loop_equivalence_report(f, alpha, x0, 100)
            assert dev <= 1e-9 * (1.0 + np.linalg.norm(x0))


def test_loop_horizon_validation():
    f = quadratic(100.0)
    with pytest.raises(ShapeError):
        run_transformed(
            f, 0.01, 0.005, np.array([1.0]), 10, r1=Signal.zeros(1, 5)
        )
