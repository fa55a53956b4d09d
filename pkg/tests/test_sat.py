import numpy as np
import pytest

from sbpkit import (
    FlowDirection,
    Interval,
    NodeFamily,
    SatProblem,
    assemble,
    build_classical_fd,
    build_counterexample,
    build_d_tilde,
    build_pseudospectral_operator,
    build_two_point,
    convergence_study,
    polynomial_exactness_check,
    solve,
    solve_problem,
)
from sbpkit.errors import ParameterError, ShapeError, SingularSystemError


def _crippled_counterexample():
    op = build_counterexample()
    d = np.array(op.d_plus)
    d[2] = 0.0
    d[3] = 0.0
    return op.with_fields(d_plus=d, d_minus=d)


# ---------------------------------------------------------------------------
# assembly


def test_forward_assembly_two_point():
    op = build_two_point()
    system = assemble(op, SatProblem(f_samples=[1.0, 1.0], u0=0.0))
    np.testing.assert_array_equal(system.system_matrix, [[1.0, 1.0], [-1.0, 1.0]])
    np.testing.assert_array_equal(system.rhs, [1.0, 1.0])


def test_forward_matrix_is_the_penalized_matrix():
    op = build_counterexample()
    system = assemble(op, SatProblem(f_samples=np.zeros(6), u0=0.5))
    np.testing.assert_array_equal(system.system_matrix, build_d_tilde(op))


def test_forward_datum_enters_through_the_norm():
    op = build_two_point()
    system = assemble(op, SatProblem(f_samples=[0.0, 0.0], u0=3.0))
    np.testing.assert_array_equal(system.rhs, [6.0, 0.0])


def test_reversed_assembly_two_point():
    op = build_two_point()
    system = assemble(
        op, SatProblem(f_samples=[1.0, 1.0], u0=1.0, direction=FlowDirection.REVERSED)
    )
    np.testing.assert_array_equal(system.system_matrix, [[-1.0, 1.0], [-1.0, -1.0]])
    np.testing.assert_array_equal(system.rhs, [1.0, -1.0])


def test_problem_sigma_follows_direction():
    forward = SatProblem(f_samples=[0.0, 0.0], u0=0.0)
    reversed_ = SatProblem(f_samples=[0.0, 0.0], u0=0.0,
                           direction=FlowDirection.REVERSED)
    assert forward.sigma == 1.0
    assert reversed_.sigma == -1.0


def test_assembly_rejects_wrong_sample_count():
    with pytest.raises(ShapeError):
        assemble(build_two_point(), SatProblem(f_samples=[1.0, 2.0, 3.0], u0=0.0))


# ---------------------------------------------------------------------------
# solving


def test_two_point_reproduces_the_identity_map():
    op = build_two_point()
    u = solve_problem(op, SatProblem(f_samples=[1.0, 1.0], u0=0.0))
    np.testing.assert_allclose(u, [0.0, 1.0], atol=1e-14)


def test_counterexample_system_is_uniquely_solvable():
    op = build_counterexample()
    u = solve_problem(op, SatProblem(f_samples=np.zeros(6), u0=1.0))
    system = assemble(op, SatProblem(f_samples=np.zeros(6), u0=1.0))
    np.testing.assert_allclose(system.system_matrix @ u, system.rhs, atol=1e-12)


def test_engineered_kernel_makes_solve_singular():
    op = _crippled_counterexample()
    with pytest.raises(SingularSystemError):
        solve_problem(op, SatProblem(f_samples=np.ones(6), u0=0.0))


def test_reversed_solve_reproduces_decreasing_line():
    # u' = -1 with u(1) = 0 has solution 1 - x
    op = build_two_point()
    u = solve_problem(
        op,
        SatProblem(f_samples=[-1.0, -1.0], u0=0.0, direction=FlowDirection.REVERSED),
    )
    np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-14)


@pytest.mark.parametrize("n", [2, 16, 33])
def test_mirror_symmetry(n):
    # reflecting the data through the interval midpoint must reflect the
    # solution: v(x) = u(a + b - x) solves the reversed problem with
    # g(x) = -f(a + b - x) and datum at b
    interval = Interval(0.0, 1.0)
    op = build_classical_fd(n, interval)
    coeffs = np.array([0.75, -2.0])  # u(x) = 0.75 - 2 x
    exact = np.polynomial.Polynomial(coeffs)
    u = solve_problem(
        op,
        SatProblem(f_samples=exact.deriv()(op.x), u0=exact(interval.a)),
    )
    reflected = interval.a + interval.b - op.x
    v = solve_problem(
        op,
        SatProblem(
            f_samples=-exact.deriv()(reflected),
            u0=exact(interval.a),
            direction=FlowDirection.REVERSED,
        ),
    )
    np.testing.assert_allclose(v, u[::-1], atol=1e-9)


# ---------------------------------------------------------------------------
# polynomial exactness harness


def test_two_point_linear_reproduction():
    op = build_two_point()
    poly = np.polynomial.Polynomial([1.0, 2.0])  # 2x + 1
    u = solve_problem(op, SatProblem(f_samples=poly.deriv()(op.x), u0=poly(0.0)))
    assert np.max(np.abs(u - poly(op.x))) < 1e-12
    assert polynomial_exactness_check(op) < 1e-12


def test_pseudospectral_quartic_reproduction():
    op = build_pseudospectral_operator(
        NodeFamily.legendre_gauss_lobatto(4, Interval(-1.0, 1.0))
    )
    assert polynomial_exactness_check(op, degree=4) < 1e-9


def test_counterexample_is_not_exact_beyond_its_order():
    op = build_counterexample()
    assert polynomial_exactness_check(op) < 1e-9
    assert polynomial_exactness_check(op, degree=2) > 1e-3


def test_exactness_harness_rejects_bad_degree():
    with pytest.raises(ParameterError):
        polynomial_exactness_check(build_two_point(), degree=-1)


# ---------------------------------------------------------------------------
# convergence studies


def test_classical_fd_second_order_convergence():
    study = convergence_study(
        build=lambda n: build_classical_fd(n, Interval(0.0, 1.0)),
        f=np.cos,
        exact_u=np.sin,
        ns=[32, 64, 128, 256],
    )
    assert study.fitted_order >= 1.9
    assert all(order >= 1.9 for order in study.pairwise_orders)
    assert not study.saturated
    assert all(e_max >= e_h for e_max, e_h in zip(study.errors_max, study.errors_h))


def test_convergence_needs_at_least_three_grids():
    with pytest.raises(ParameterError):
        convergence_study(
            build=lambda n: build_classical_fd(n, Interval(0.0, 1.0)),
            f=np.cos,
            exact_u=np.sin,
            ns=[64],
        )
    with pytest.raises(ParameterError):
        convergence_study(
            build=lambda n: build_classical_fd(n, Interval(0.0, 1.0)),
            f=np.cos,
            exact_u=np.sin,
            ns=[64, 128],
        )


def test_constant_data_saturates():
    study = convergence_study(
        build=lambda n: build_classical_fd(n, Interval(0.0, 1.0)),
        f=lambda x: np.zeros_like(x),
        exact_u=lambda x: np.full_like(np.asarray(x, dtype=float), 4.0),
        ns=[8, 16, 32],
    )
    assert study.saturated
    assert max(study.errors_h) <= 1e-12


def test_solution_residual_bound_is_enforced():
    # solvable but observed residuals stay inside the advertised bound
    op = build_classical_fd(128, Interval(0.0, 1.0))
    problem = SatProblem(f_samples=np.cos(op.x), u0=0.0)
    system = assemble(op, problem)
    u = solve(system)
    residual = np.linalg.norm(system.system_matrix @ u - system.rhs)
    bound = 1e-12 * (
        np.linalg.norm(system.system_matrix, "fro") * np.linalg.norm(u)
        + np.linalg.norm(system.rhs)
    )
    assert residual <= bound
