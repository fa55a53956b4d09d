"""Core data model for summation-by-parts (SBP) operator pairs.

An operator pair bundles the derivative matrices ``D_plus`` and ``D_minus``
with the norm (quadrature) matrix ``H``, the dissipation matrix ``S``, the
boundary interpolation vectors ``p0`` and ``pn``, the grid ``x``, the order
of accuracy ``q`` and the interval the grid lives on.  The defining algebra:

* accuracy:    ``D_pm x^j = j x^(j-1)``, ``p0.x^j = a^j``, ``pn.x^j = b^j``
  for ``j = 0..q`` (elementwise powers, ``x^0 = 1``),
* H symmetric positive definite,
* ``H D_plus + D_plus^T H = -p0 p0^T + pn pn^T + S`` with S symmetric
  positive semi-definite,
* ``H D_plus + D_minus^T H = -p0 p0^T + pn pn^T``,

which forces ``D_minus = D_plus - H^{-1} S``.  This module only enforces
structural invariants (shapes, distinct nodes); the algebraic conditions
are checked by :mod:`sbpkit.verify`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvariantError, ParameterError, ShapeError, SingularNormError

__all__ = [
    "Interval",
    "OperatorFlavor",
    "SbpOperatorPair",
    "build_counterexample",
    "build_two_point",
    "build_classical_fd",
    "classify_flavor",
    "derive_d_minus",
    "solve_against_norm",
    "BUILTIN_OPERATORS",
]


@dataclass(frozen=True)
class Interval:
    """A nonempty interval ``[a, b]`` with ``b > a``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise InvariantError("interval endpoints must be finite")
        if not b > a:
            raise InvariantError(f"interval requires b > a, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a


class OperatorFlavor(enum.Enum):
    """Special cases of the operator algebra, by the constraints satisfied.

    ``classical``:   S = 0 and p0, pn are the unit boundary basis vectors.
    ``generalized``: S = 0 with general boundary interpolation vectors.
    ``upwind``:      S != 0 with unit boundary basis vectors.
    ``general``:     none of the above (e.g. dissipation added to a
                     generalized operator).
    """

    CLASSICAL = "classical"
    GENERALIZED = "generalized"
    UPWIND = "upwind"
    GENERAL = "general"


def _locked(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SbpOperatorPair:
    """The full SBP bundle on ``n + 1`` grid nodes.

    Instances are immutable; the arrays are copied and locked at
    construction, so values may be shared freely across threads.
    """

    d_plus: np.ndarray
    d_minus: np.ndarray
    h: np.ndarray
    s: np.ndarray
    p0: np.ndarray
    pn: np.ndarray
    x: np.ndarray
    q: int
    interval: Interval
    name: str | None = None

    def __post_init__(self) -> None:
        x = _locked(np.ravel(self.x))
        m = x.size
        if m < 2:
            raise InvariantError("an operator needs at least two grid nodes")
        if int(self.q) < 1:
            raise InvariantError(f"order of accuracy must be >= 1, got {self.q}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "x", x)
        for attr in ("d_plus", "d_minus", "h", "s"):
            mat = _locked(getattr(self, attr))
            if mat.shape != (m, m):
                raise InvariantError(
                    f"{attr} must have shape {(m, m)}, got {mat.shape}"
                )
            object.__setattr__(self, attr, mat)
        for attr in ("p0", "pn"):
            vec = _locked(np.ravel(getattr(self, attr)))
            if vec.size != m:
                raise InvariantError(f"{attr} must have length {m}, got {vec.size}")
            object.__setattr__(self, attr, vec)
        for attr in ("d_plus", "d_minus", "h", "s", "p0", "pn", "x"):
            if not np.all(np.isfinite(getattr(self, attr))):
                raise InvariantError(f"{attr} contains non-finite entries")
        xs = np.sort(x)
        if np.any(xs[1:] == xs[:-1]):
            raise InvariantError("grid nodes must be pairwise distinct")

    @property
    def n(self) -> int:
        """Grid index of the last node; the operator acts on n + 1 values."""
        return self.x.size - 1

    def with_fields(self, **changes) -> "SbpOperatorPair":
        """Copy with the given fields replaced (re-runs structural checks)."""
        return replace(self, **changes)


def _is_diagonal(a: np.ndarray) -> bool:
    return np.count_nonzero(a - np.diag(np.diagonal(a))) == 0


def solve_against_norm(h: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Compute ``H^{-1} rhs`` without densely inverting H.

    Diagonal H is solved entrywise; anything else goes through an LU solve.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeError(f"norm matrix must be square, got shape {h.shape}")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != h.shape[0]:
        raise ShapeError(
            f"rhs leading dimension {rhs.shape[0]} does not match H size {h.shape[0]}"
        )
    if _is_diagonal(h):
        d = np.diagonal(h)
        if np.any(d == 0.0):
            raise SingularNormError("norm matrix has a zero diagonal entry")
        return rhs / d if rhs.ndim == 1 else rhs / d[:, None]
    try:
        return np.linalg.solve(h, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularNormError(f"norm matrix is singular: {exc}") from exc


def derive_d_minus(d_plus: np.ndarray, h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Return ``D_minus = D_plus - H^{-1} S``."""
    d_plus = np.asarray(d_plus, dtype=float)
    s = np.asarray(s, dtype=float)
    if d_plus.shape != s.shape:
        raise ShapeError(
            f"d_plus shape {d_plus.shape} does not match s shape {s.shape}"
        )
    return d_plus - solve_against_norm(h, s)


def classify_flavor(op: SbpOperatorPair, tolerance: float = 1e-12) -> OperatorFlavor:
    """Classify an operator by which defining constraints it satisfies."""
    m = op.x.size
    e0 = np.zeros(m)
    e0[0] = 1.0
    en = np.zeros(m)
    en[-1] = 1.0
    s_zero = np.max(np.abs(op.s)) <= tolerance
    unit_boundaries = (
        np.max(np.abs(op.p0 - e0)) <= tolerance
        and np.max(np.abs(op.pn - en)) <= tolerance
    )
    if s_zero and unit_boundaries:
        return OperatorFlavor.CLASSICAL
    if s_zero:
        return OperatorFlavor.GENERALIZED
    if unit_boundaries:
        return OperatorFlavor.UPWIND
    return OperatorFlavor.GENERAL


def build_counterexample() -> SbpOperatorPair:
    """The 6-node order-1 operator whose penalized matrix has a purely
    imaginary conjugate eigenvalue pair.

    The operator is nullspace consistent, yet two eigenvalues of
    ``D_plus + H^{-1} p0 p0^T`` sit exactly on the imaginary axis, which
    makes it the canonical fixture for the diagnosis and repair pipeline.
    """
    d_plus = (
        np.array(
            [
                [-5, 4, 2, 0, -2, 1],
                [-2, 0, 1, 0, 2, -1],
                [-1, -1, 0, 2, 0, 0],
                [0, 0, -2, 0, 1, 1],
                [1, -2, 0, -1, 0, 2],
                [-1, 2, 0, -2, -4, 5],
            ],
            dtype=float,
        )
        / 5.0
    )
    x = np.array([-5, -3, -1, 1, 3, 5], dtype=float) / 2.0
    h = np.diag([0.5, 1.0, 1.0, 1.0, 1.0, 0.5])
    s = np.zeros((6, 6))
    p0 = np.zeros(6)
    p0[0] = 1.0
    pn = np.zeros(6)
    pn[5] = 1.0
    return SbpOperatorPair(
        d_plus=d_plus,
        d_minus=d_plus,
        h=h,
        s=s,
        p0=p0,
        pn=pn,
        x=x,
        q=1,
        interval=Interval(-2.5, 2.5),
        name="counterexample",
    )


def build_two_point() -> SbpOperatorPair:
    """The minimal 2-node operator on [0, 1] (exact for linears)."""
    d_plus = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    return SbpOperatorPair(
        d_plus=d_plus,
        d_minus=d_plus,
        h=np.diag([0.5, 0.5]),
        s=np.zeros((2, 2)),
        p0=np.array([1.0, 0.0]),
        pn=np.array([0.0, 1.0]),
        x=np.array([0.0, 1.0]),
        q=1,
        interval=Interval(0.0, 1.0),
        name="two_point",
    )


def build_classical_fd(n: int, interval: Interval) -> SbpOperatorPair:
    """Second-order central operator with one-sided boundary closures.

    Uniform grid of ``n + 1`` nodes; interior rows are central differences,
    the boundary rows are first-order one-sided, and H is the trapezoid
    quadrature.  Order of accuracy q = 1 (set by the boundary rows).
    """
    if n < 2:
        raise ParameterError(f"classical operator needs n >= 2, got {n}")
    dx = interval.length / n
    m = n + 1
    d_plus = np.zeros((m, m))
    d_plus[0, 0] = -1.0 / dx
    d_plus[0, 1] = 1.0 / dx
    d_plus[m - 1, m - 2] = -1.0 / dx
    d_plus[m - 1, m - 1] = 1.0 / dx
    for i in range(1, m - 1):
        d_plus[i, i - 1] = -1.0 / (2.0 * dx)
        d_plus[i, i + 1] = 1.0 / (2.0 * dx)
    weights = np.full(m, dx)
    weights[0] = weights[-1] = dx / 2.0
    p0 = np.zeros(m)
    p0[0] = 1.0
    pn = np.zeros(m)
    pn[-1] = 1.0
    return SbpOperatorPair(
        d_plus=d_plus,
        d_minus=d_plus,
        h=np.diag(weights),
        s=np.zeros((m, m)),
        p0=p0,
        pn=pn,
        x=np.linspace(interval.a, interval.b, m),
        q=1,
        interval=interval,
        name=f"classical_fd_{n}",
    )


BUILTIN_OPERATORS = {
    "counterexample": build_counterexample,
    "two_point": build_two_point,
}
