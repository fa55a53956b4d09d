"""Command-line front end.

Subcommands: ``verify``, ``spectrum``, ``repair``, ``pseudospectral``,
``solve``, ``converge`` and ``demo``.  Each emits a machine-readable JSON
report (deterministic: byte-identical for identical inputs) or a
human-readable text rendering of the same data, so the two formats can never
disagree on a verdict.

Exit status: 0 on success/pass, 1 on a verification or certification
failure, 2 on usage or input errors.  The environment variable
``SBP_TOLERANCE`` overrides the default tolerance.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import jsonio, pseudospectral, repair, sat, spectral, storage, verify
from .errors import ParameterError, SbpError
from .linalg import DEFAULT_TOLERANCE
from .operators import (
    BUILTIN_OPERATORS,
    Interval,
    SbpOperatorPair,
    build_classical_fd,
)
from .repair import NormChoice
from .sat import FlowDirection, SatProblem

__all__ = ["CliConfig", "run", "main", "console"]

DEFAULT_TARGET_EPS = 1e-6

_NAMED_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "zero": lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    "one": lambda x: np.ones_like(np.asarray(x, dtype=float)),
}

#: exact solution -> its derivative, for the convergence subcommand
_CONVERGENCE_PAIRS = {
    "sin": (np.cos, np.sin),
    "cos": (lambda x: -np.sin(x), np.cos),
    "exp": (np.exp, np.exp),
}


@dataclass
class CliConfig:
    """Validated options for one invocation."""

    subcommand: str
    input_path: str | None = None
    output_path: str | None = None
    tolerance: float = DEFAULT_TOLERANCE
    target_eps: float = DEFAULT_TARGET_EPS
    norm_choice: NormChoice = NormChoice.FROBENIUS
    format: str = "json"
    builtin: str | None = None
    require_eigenvalue_property: bool = False
    family: str | None = None
    n: int = 4
    interval: tuple[float, float] = (-1.0, 1.0)
    nodes: str | None = None
    certify: bool = False
    function: str | None = None
    f_samples_path: str | None = None
    u0: float = 0.0
    direction: str = "forward"
    grids: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.tolerance > 0.0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")
        if not self.target_eps > 0.0:
            raise ParameterError(f"target-eps must be positive, got {self.target_eps}")


def _fmt(value: float) -> str:
    return format(float(value), ".6g")


def _emit(text: str, output_path: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if output_path:
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_input(config: CliConfig) -> SbpOperatorPair:
    if config.input_path and config.builtin:
        raise ParameterError("give either --input or --builtin, not both")
    if config.builtin:
        if config.builtin in BUILTIN_OPERATORS:
            return BUILTIN_OPERATORS[config.builtin]()
        if config.builtin.startswith("classical_fd_"):
            n = int(config.builtin.removeprefix("classical_fd_"))
            return build_classical_fd(n, Interval(0.0, 1.0))
        raise ParameterError(
            f"unknown builtin operator {config.builtin!r}; available: "
            f"{sorted(BUILTIN_OPERATORS)} or classical_fd_<n>"
        )
    if not config.input_path:
        raise ParameterError("an operator is required (--input PATH or --builtin NAME)")
    if not os.path.exists(config.input_path):
        raise ParameterError(f"input file not found: {config.input_path}")
    return storage.load_operator(config.input_path)


def _complex_str(value: complex, digits: int = 10) -> str:
    re = format(value.real, f".{digits}g")
    im = format(abs(value.imag), f".{digits}g")
    sign = "+" if value.imag >= 0 else "-"
    return f"{re} {sign} {im}i"


# ---------------------------------------------------------------------------
# verify


def _verify_text(op: SbpOperatorPair, report: verify.VerificationReport) -> str:
    lines = [
        f"operator: {op.name or '<unnamed>'} (n={op.n}, q={op.q})",
        f"tolerance: {_fmt(report.tolerance)}",
        f"{'property':<16} {'residual':>12}  verdict",
    ]
    for r in report.residuals:
        lines.append(
            f"{r.property.value:<16} {_fmt(r.residual):>12}  "
            f"{'pass' if r.passed else 'FAIL'}"
        )
    lines.append(f"observed_order: {report.observed_order}")
    lines.append(f"nullspace_consistent: {report.nullspace_consistent}")
    lines.append(f"eigenvalue_property: {report.eigenvalue_property}")
    lines.append(f"verdict: {'PASS' if report.all_passed() else 'FAIL'}")
    return "\n".join(lines)


def _cmd_verify(config: CliConfig) -> int:
    op = _load_input(config)
    report = verify.verify_all(op, config.tolerance)
    if config.format == "json":
        _emit(jsonio.dumps(report.to_document()), config.output_path)
    else:
        _emit(_verify_text(op, report), config.output_path)
    if not report.all_passed():
        return 1
    if config.require_eigenvalue_property and not report.eigenvalue_property:
        check = verify.check_eigenvalue_property(op, config.tolerance)
        offenders = ", ".join(_complex_str(v) for v in check.offending)
        print(
            f"eigenvalue property absent: offending eigenvalues {offenders}",
            file=sys.stderr,
        )
        return 1
    return 0


# ---------------------------------------------------------------------------
# spectrum


def _spectrum_text(op: SbpOperatorPair, report: spectral.SpectralReport) -> str:
    lines = [
        f"operator: {op.name or '<unnamed>'} (n={op.n}, q={op.q})",
        f"imaginary conjugate pairs: m={report.m}",
    ]
    for p in report.pairs:
        lines.append(f"  {_complex_str(p.lam):<32} {p.classification.value}")
    return "\n".join(lines)


def _cmd_spectrum(config: CliConfig) -> int:
    op = _load_input(config)
    report = spectral.spectral_report(op, tau_eig=config.tolerance)
    if config.format == "json":
        _emit(jsonio.dumps(report.to_document()), config.output_path)
    else:
        _emit(_spectrum_text(op, report), config.output_path)
    return 0


# ---------------------------------------------------------------------------
# repair


def _cmd_repair(config: CliConfig) -> int:
    op = _load_input(config)
    repaired, plan = repair.repair_operator(
        op, config.target_eps, config.norm_choice, config.tolerance
    )
    if config.format == "json":
        doc = {
            "operator": storage.operator_to_document(repaired),
            "plan": plan.to_document(),
        }
        _emit(jsonio.dumps(doc), config.output_path)
    else:
        lines = [
            f"operator: {op.name or '<unnamed>'} (n={op.n}, q={op.q})",
            f"conjugate pairs shifted: m={plan.m}",
            f"epsilons: [{', '.join(_fmt(e) for e in plan.epsilons)}]",
            f"achieved |D_plus' - D_plus| ({plan.norm_choice.value}): "
            f"{_fmt(plan.norm_bound)}",
        ]
        _emit("\n".join(lines), config.output_path)
    return 0


# ---------------------------------------------------------------------------
# pseudospectral


def _make_family(config: CliConfig, n: int) -> pseudospectral.NodeFamily:
    interval = Interval(*config.interval)
    tag = pseudospectral.Family(config.family)
    if tag is pseudospectral.Family.LEGENDRE_GAUSS_LOBATTO:
        return pseudospectral.NodeFamily.legendre_gauss_lobatto(n, interval)
    if tag is pseudospectral.Family.CHEBYSHEV_GAUSS_LOBATTO:
        return pseudospectral.NodeFamily.chebyshev_gauss_lobatto(n, interval)
    if tag is pseudospectral.Family.UNIFORM:
        return pseudospectral.NodeFamily.uniform(n, interval)
    if not config.nodes:
        raise ParameterError("--nodes is required for the explicit family")
    nodes = np.array([float(v) for v in config.nodes.split(",")])
    return pseudospectral.NodeFamily.explicit(nodes, interval)


def _certification_text(report: pseudospectral.CertificationReport) -> str:
    lines = [f"certified: {report.certified}"]
    for e in report.entries:
        lines.append(
            f"  {e.label:<48} min Re(lambda)={_fmt(e.min_real_part)} "
            f"{'pass' if e.passed else 'FAIL'}"
        )
    for failure in report.failures:
        lines.append(f"  failure: {failure}")
    return "\n".join(lines)


def _cmd_pseudospectral(config: CliConfig) -> int:
    if config.certify:
        if pseudospectral.Family(config.family) is pseudospectral.Family.EXPLICIT:
            families = [_make_family(config, config.n)]
        else:
            families = [_make_family(config, n) for n in range(1, config.n + 1)]
        report = pseudospectral.certify_families(families, tau_eig=config.tolerance)
        if config.format == "json":
            _emit(jsonio.dumps(report.to_document()), config.output_path)
        else:
            _emit(_certification_text(report), config.output_path)
        return 0 if report.certified else 1
    family = _make_family(config, config.n)
    op = pseudospectral.build_pseudospectral_operator(family)
    _emit(jsonio.dumps(storage.operator_to_document(op)), config.output_path)
    return 0


# ---------------------------------------------------------------------------
# solve


def _cmd_solve(config: CliConfig) -> int:
    op = _load_input(config)
    if config.function and config.f_samples_path:
        raise ParameterError("give either --f or --f-samples, not both")
    if config.function:
        if config.function not in _NAMED_FUNCTIONS:
            raise ParameterError(
                f"unknown function {config.function!r}; available: "
                f"{sorted(_NAMED_FUNCTIONS)}"
            )
        f_samples = _NAMED_FUNCTIONS[config.function](op.x)
    elif config.f_samples_path:
        import json

        with open(config.f_samples_path, "r", encoding="utf-8") as fh:
            f_samples = np.asarray(json.load(fh), dtype=float)
    else:
        raise ParameterError("a right-hand side is required (--f or --f-samples)")
    problem = SatProblem(
        f_samples=f_samples, u0=config.u0, direction=FlowDirection(config.direction)
    )
    u = sat.solve_problem(op, problem)
    if config.format == "json":
        doc = {
            "op_ref": op.name or f"operator(n={op.n}, q={op.q})",
            "direction": config.direction,
            "u0": config.u0,
            "u": u.tolist(),
        }
        _emit(jsonio.dumps(doc), config.output_path)
    else:
        lines = [f"{x:.6g} {v:.6g}" for x, v in zip(op.x, u)]
        _emit("\n".join(lines), config.output_path)
    return 0


# ---------------------------------------------------------------------------
# converge


def _cmd_converge(config: CliConfig) -> int:
    if config.family != "classical_fd":
        raise ParameterError(
            f"unknown operator family {config.family!r} for convergence studies; "
            "available: classical_fd"
        )
    if config.function not in _CONVERGENCE_PAIRS:
        raise ParameterError(
            f"unknown function {config.function!r}; available: "
            f"{sorted(_CONVERGENCE_PAIRS)}"
        )
    if not config.grids:
        raise ParameterError("--grids is required (comma-separated resolutions)")
    interval = Interval(*config.interval)
    f, exact_u = _CONVERGENCE_PAIRS[config.function]
    study = sat.convergence_study(
        build=lambda n: build_classical_fd(n, interval),
        f=f,
        exact_u=exact_u,
        ns=config.grids,
    )
    if config.format == "json":
        _emit(jsonio.dumps(study.to_document()), config.output_path)
    else:
        rows = ["n,spacing,error_h,error_max,order"]
        for k, n in enumerate(study.ns):
            order = "" if k == 0 else format(study.pairwise_orders[k - 1], ".6g")
            rows.append(
                f"{n},{study.spacings[k]:.6g},{study.errors_h[k]:.6g},"
                f"{study.errors_max[k]:.6g},{order}"
            )
        rows.append(f"fit,,,,{study.fitted_order:.6g}")
        _emit("\n".join(rows), config.output_path)
    return 0


# ---------------------------------------------------------------------------
# demo


def _cmd_demo(config: CliConfig) -> int:
    op = BUILTIN_OPERATORS["counterexample"]()
    before_verify = verify.verify_all(op, config.tolerance)
    before_spectrum = spectral.spectral_report(op, tau_eig=config.tolerance)
    repaired, plan = repair.repair_operator(
        op, config.target_eps, config.norm_choice, config.tolerance
    )
    after_verify = verify.verify_all(repaired, config.tolerance)
    after_spectrum = spectral.spectral_report(repaired, tau_eig=config.tolerance)

    if config.format == "json":
        doc = {
            "before": {
                "verification": before_verify.to_document(),
                "spectrum": before_spectrum.to_document(),
            },
            "plan": plan.to_document(),
            "after": {
                "verification": after_verify.to_document(),
                "spectrum": after_spectrum.to_document(),
            },
        }
        _emit(jsonio.dumps(doc), config.output_path)
    else:
        lines = [
            f"operator: {op.name} (n={op.n}, q={op.q})",
            f"verification before repair: "
            f"{'PASS' if before_verify.all_passed() else 'FAIL'}, "
            f"nullspace_consistent={before_verify.nullspace_consistent}, "
            f"eigenvalue_property={before_verify.eigenvalue_property}",
            "spectrum before repair:",
        ]
        for p in before_spectrum.pairs:
            lines.append(f"  {_complex_str(p.lam):<34} {p.classification.value}")
        lines.append(
            f"repair: target eps={_fmt(config.target_eps)} "
            f"({plan.norm_choice.value}), m={plan.m} conjugate pairs, "
            f"achieved |D_plus' - D_plus|={_fmt(plan.norm_bound)}"
        )
        lines.append("spectrum after repair:")
        for p in after_spectrum.pairs:
            lines.append(f"  {_complex_str(p.lam):<34} {p.classification.value}")
        lines.append(
            f"verification after repair: "
            f"{'PASS' if after_verify.all_passed() else 'FAIL'}, "
            f"eigenvalue_property={after_verify.eigenvalue_property}"
        )
        _emit("\n".join(lines), config.output_path)
    ok = (
        before_verify.all_passed()
        and after_verify.all_passed()
        and after_verify.eigenvalue_property
    )
    return 0 if ok else 1


_COMMANDS = {
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
    "repair": _cmd_repair,
    "pseudospectral": _cmd_pseudospectral,
    "solve": _cmd_solve,
    "converge": _cmd_converge,
    "demo": _cmd_demo,
}


def run(config: CliConfig) -> int:
    """Dispatch a validated configuration; returns the exit status."""
    return _COMMANDS[config.subcommand](config)


def _default_tolerance() -> float:
    raw = os.environ.get("SBP_TOLERANCE")
    if raw is None:
        return DEFAULT_TOLERANCE
    try:
        value = float(raw)
    except ValueError:
        raise ParameterError(f"SBP_TOLERANCE is not a number: {raw!r}") from None
    if not value > 0.0:
        raise ParameterError(f"SBP_TOLERANCE must be positive, got {value}")
    return value


def _build_parser(default_tol: float) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbpkit",
        description="Construct, verify, diagnose and repair summation-by-parts "
        "operator pairs.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, with_input: bool = True) -> None:
        if with_input:
            p.add_argument("--input", dest="input_path", help="operator document path")
            p.add_argument(
                "--builtin",
                help="builtin operator name (counterexample, two_point, "
                "classical_fd_<n>)",
            )
        p.add_argument("--output", dest="output_path", help="write the report here")
        p.add_argument(
            "--tolerance",
            type=float,
            default=default_tol,
            help=f"verification tolerance (default {default_tol:g}; "
            "env SBP_TOLERANCE overrides the default)",
        )
        p.add_argument(
            "--format",
            choices=("json", "text"),
            default="json",
            help="report format (default json)",
        )

    p = sub.add_parser("verify", help="check every algebraic property")
    common(p)
    p.add_argument(
        "--require-eigenvalue-property",
        action="store_true",
        help="also fail (exit 1) when the penalized spectrum touches the "
        "imaginary axis",
    )

    p = sub.add_parser("spectrum", help="classified spectrum of the penalized matrix")
    common(p)

    p = sub.add_parser("repair", help="add minimal dissipation to fix the spectrum")
    common(p)
    p.add_argument(
        "--target-eps",
        dest="target_eps",
        type=float,
        default=DEFAULT_TARGET_EPS,
        help=f"perturbation size budget (default {DEFAULT_TARGET_EPS:g})",
    )
    p.add_argument(
        "--norm",
        dest="norm_choice",
        choices=tuple(c.value for c in NormChoice),
        default=NormChoice.FROBENIUS.value,
        help="norm for the budget (default frobenius)",
    )

    p = sub.add_parser("pseudospectral", help="generate or certify nodal operators")
    common(p, with_input=False)
    p.add_argument(
        "--family",
        choices=tuple(f.value for f in pseudospectral.Family),
        default=pseudospectral.Family.LEGENDRE_GAUSS_LOBATTO.value,
    )
    p.add_argument("--n", type=int, default=4, help="polynomial degree (default 4)")
    p.add_argument(
        "--interval",
        type=float,
        nargs=2,
        default=(-1.0, 1.0),
        metavar=("A", "B"),
    )
    p.add_argument("--nodes", help="comma-separated nodes for the explicit family")
    p.add_argument(
        "--certify",
        action="store_true",
        help="certify the family for degrees 1..n instead of emitting an operator",
    )

    p = sub.add_parser("solve", help="boundary-penalized solve of u' = f")
    common(p)
    p.add_argument("--f", dest="function", help="named right-hand side (sin, cos, exp, zero, one)")
    p.add_argument(
        "--f-samples",
        dest="f_samples_path",
        help="JSON array with f sampled at the operator nodes",
    )
    p.add_argument("--u0", type=float, default=0.0, help="boundary datum (default 0)")
    p.add_argument(
        "--direction",
        choices=tuple(d.value for d in FlowDirection),
        default=FlowDirection.FORWARD.value,
    )

    p = sub.add_parser("converge", help="grid-refinement convergence study")
    common(p, with_input=False)
    p.add_argument("--family", default="classical_fd")
    p.add_argument("--grids", help="comma-separated resolutions, e.g. 32,64,128,256")
    p.add_argument(
        "--function",
        default="sin",
        help="exact solution name (sin, cos, exp); f is its derivative",
    )
    p.add_argument(
        "--interval",
        type=float,
        nargs=2,
        default=(0.0, 1.0),
        metavar=("A", "B"),
    )

    p = sub.add_parser(
        "demo",
        help="diagnose and repair the builtin 6-node operator, printing the "
        "spectra before and after",
    )
    common(p, with_input=False)
    p.add_argument(
        "--target-eps",
        dest="target_eps",
        type=float,
        default=DEFAULT_TARGET_EPS,
    )
    p.add_argument(
        "--norm",
        dest="norm_choice",
        choices=tuple(c.value for c in NormChoice),
        default=NormChoice.FROBENIUS.value,
    )
    p.set_defaults(format="text")
    return parser


def _config_from_args(args: argparse.Namespace) -> CliConfig:
    fields = {
        "subcommand": args.subcommand,
        "output_path": args.output_path,
        "tolerance": args.tolerance,
        "format": args.format,
    }
    for name in (
        "input_path",
        "builtin",
        "require_eigenvalue_property",
        "family",
        "n",
        "nodes",
        "certify",
        "function",
        "f_samples_path",
        "u0",
        "direction",
    ):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    if hasattr(args, "target_eps"):
        fields["target_eps"] = args.target_eps
    if hasattr(args, "norm_choice"):
        fields["norm_choice"] = NormChoice(args.norm_choice)
    if hasattr(args, "interval"):
        fields["interval"] = tuple(args.interval)
    if getattr(args, "grids", None):
        fields["grids"] = tuple(int(v) for v in args.grids.split(","))
    return CliConfig(**fields)


def main(argv: list[str] | None = None) -> int:
    try:
        default_tol = _default_tolerance()
        parser = _build_parser(default_tol)
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        return run(config)
    except SbpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    console()
