"""Boundary-penalized solves of the model problem u' = f, u(a) = u0.

The forward discretization is ``D_plus u = f + sigma H^{-1} p0 (u0 - p0.u)``
with sigma = 1; collecting the solution terms on the left gives the
penalized matrix ``D_plus + H^{-1} p0 p0^T``.  Reversed flow uses D_minus,
imposes the datum at b through pn, and takes sigma = -1; the same collection
yields ``D_minus + sigma H^{-1} pn pn^T``.  The reversed assembly is
validated by the mirror-symmetry property: reflecting the data reflects the
solution.

Also provides the polynomial-exactness harness (degree <= q must be
reproduced through the solve) and grid-refinement convergence studies in the
discrete H norm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, ShapeError, SingularSystemError
from .linalg import max_abs
from .operators import SbpOperatorPair, solve_against_norm
from .spectral import build_d_tilde, h_norm

__all__ = [
    "FlowDirection",
    "SatProblem",
    "SatSystem",
    "assemble",
    "solve",
    "solve_problem",
    "polynomial_exactness_check",
    "ConvergenceStudy",
    "convergence_study",
]

#: Relative residual bound every successful solve must satisfy.
SOLVE_RESIDUAL_BOUND = 1e-12

#: H-norm errors below this (times the solution scale) are roundoff, not
#: discretization error; convergence orders are then meaningless.
SATURATION_FLOOR = 1e-13


class FlowDirection(enum.Enum):
    FORWARD = "forward"
    REVERSED = "reversed"


@dataclass(frozen=True)
class SatProblem:
    """Right-hand side samples, boundary datum and flow direction.

    The penalty parameter is tied to the direction: sigma = 1 for forward
    flow (datum at a), sigma = -1 for reversed flow (datum at b).
    """

    f_samples: np.ndarray
    u0: float
    direction: FlowDirection = FlowDirection.FORWARD

    def __post_init__(self) -> None:
        samples = np.array(np.ravel(self.f_samples), dtype=float)
        samples.flags.writeable = False
        object.__setattr__(self, "f_samples", samples)
        object.__setattr__(self, "u0", float(self.u0))

    @property
    def sigma(self) -> float:
        return 1.0 if self.direction is FlowDirection.FORWARD else -1.0


@dataclass(frozen=True)
class SatSystem:
    """An assembled linear system plus the operator it came from."""

    system_matrix: np.ndarray
    rhs: np.ndarray
    op_ref: str


def assemble(op: SbpOperatorPair, problem: SatProblem) -> SatSystem:
    """Collect the solution-dependent penalty terms into the system matrix."""
    m = op.n + 1
    if problem.f_samples.size != m:
        raise ShapeError(
            f"f has {problem.f_samples.size} samples, operator has {m} nodes"
        )
    sigma = problem.sigma
    if problem.direction is FlowDirection.FORWARD:
        matrix = build_d_tilde(op)
        penalty = solve_against_norm(op.h, op.p0)
    else:
        penalty = solve_against_norm(op.h, op.pn)
        matrix = op.d_minus + sigma * np.outer(penalty, op.pn)
    rhs = problem.f_samples + sigma * penalty * problem.u0
    ref = op.name if op.name else f"operator(n={op.n}, q={op.q})"
    return SatSystem(system_matrix=matrix, rhs=rhs, op_ref=ref)


def solve(system: SatSystem) -> np.ndarray:
    """Solve by dense LU with partial pivoting and verify the residual."""
    a, rhs = system.system_matrix, system.rhs
    try:
        u = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"system for {system.op_ref} is singular (the operator is not "
            f"nullspace consistent): {exc}"
        ) from exc
    residual = float(np.linalg.norm(a @ u - rhs))
    bound = SOLVE_RESIDUAL_BOUND * (
        float(np.linalg.norm(a, "fro")) * float(np.linalg.norm(u))
        + float(np.linalg.norm(rhs))
    )
    if not residual <= bound:
        raise SingularSystemError(
            f"system for {system.op_ref} is numerically singular: residual "
            f"{residual:.3e} exceeds {bound:.3e}"
        )
    return u


def solve_problem(op: SbpOperatorPair, problem: SatProblem) -> np.ndarray:
    return solve(assemble(op, problem))


def polynomial_exactness_check(
    op: SbpOperatorPair,
    degree: int | None = None,
    trials: int = 20,
    seed: int = 1902,
) -> float:
    """Max relative error when reproducing random polynomials by the solve.

    Random polynomials p of the given degree (default: the operator's order
    q) are pushed through the forward solve with f = p' and u0 = p(a); for
    degree <= q the result must match p at the nodes to roundoff.  Assumes
    the operator verifies; errors from a singular system propagate.
    """
    if degree is None:
        degree = op.q
    if degree < 0:
        raise ParameterError(f"degree must be >= 0, got {degree}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        coeffs = rng.uniform(-1.0, 1.0, degree + 1)
        poly = np.polynomial.Polynomial(coeffs)
        exact = poly(op.x)
        problem = SatProblem(
            f_samples=poly.deriv()(op.x),
            u0=float(poly(op.interval.a)),
            direction=FlowDirection.FORWARD,
        )
        u = solve_problem(op, problem)
        scale = max(1.0, max_abs(exact))
        worst = max(worst, max_abs(u - exact) / scale)
    return worst


@dataclass(frozen=True)
class ConvergenceStudy:
    """Errors and observed orders over a sequence of resolutions.

    ``fitted_order`` is the least-squares slope of log(error) against
    log(spacing) over all grids; ``pairwise_orders`` are the per-step
    diagnostics.  ``saturated`` flags error levels at roundoff, where the
    orders stop meaning anything.
    """

    ns: tuple[int, ...]
    spacings: tuple[float, ...]
    errors_h: tuple[float, ...]
    errors_max: tuple[float, ...]
    pairwise_orders: tuple[float, ...]
    fitted_order: float
    saturated: bool

    def to_document(self) -> dict:
        return {
            "ns": list(self.ns),
            "spacings": list(self.spacings),
            "errors_h": list(self.errors_h),
            "errors_max": list(self.errors_max),
            "pairwise_orders": list(self.pairwise_orders),
            "fitted_order": self.fitted_order,
            "saturated": self.saturated,
        }


def convergence_study(
    build: Callable[[int], SbpOperatorPair],
    f: Callable[[np.ndarray], np.ndarray],
    exact_u: Callable[[np.ndarray], np.ndarray],
    ns: Sequence[int],
) -> ConvergenceStudy:
    """Forward solves across resolutions with H-norm error measurement."""
    ns = [int(n) for n in ns]
    if len(ns) < 3:
        raise ParameterError(
            f"a convergence study needs at least 3 resolutions, got {len(ns)}"
        )
    if sorted(set(ns)) != ns:
        raise ParameterError("resolutions must be strictly increasing")
    spacings: list[float] = []
    errors_h: list[float] = []
    errors_max: list[float] = []
    solution_scale = 1.0
    for n in ns:
        op = build(n)
        exact = np.asarray(exact_u(op.x), dtype=float)
        problem = SatProblem(
            f_samples=np.asarray(f(op.x), dtype=float),
            u0=float(exact_u(op.interval.a)),
        )
        u = solve_problem(op, problem)
        err = u - exact
        spacings.append(op.interval.length / n)
        errors_h.append(h_norm(err, op.h))
        errors_max.append(max_abs(err))
        solution_scale = max(solution_scale, max_abs(exact))

    floor = SATURATION_FLOOR * solution_scale
    saturated = all(e <= floor for e in errors_h)
    safe = [max(e, np.finfo(float).tiny) for e in errors_h]
    pairwise = tuple(
        float(np.log(safe[k] / safe[k + 1]) / np.log(ns[k + 1] / ns[k]))
        for k in range(len(ns) - 1)
    )
    slope, _ = np.polyfit(np.log(spacings), np.log(safe), 1)
    return ConvergenceStudy(
        ns=tuple(ns),
        spacings=tuple(spacings),
        errors_h=tuple(errors_h),
        errors_max=tuple(errors_max),
        pairwise_orders=pairwise,
        fitted_order=float(slope),
        saturated=saturated,
    )
