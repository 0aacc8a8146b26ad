"""
命令行入口模块

argparse 子命令把各计算模块串起来，输出 RunReport（--json 时为机器可读 JSON）

退出码：0 成功；1 数值失败或判据未通过（附诊断 JSON）；2 参数错误（argparse）
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from pydantic import ValidationError
from structlog import get_logger

from chylab import __version__
from chylab.accept import AcceptanceOptions, run_acceptance
from chylab.amplitudes import (
    chy_partial,
    chy_scalar,
    compare,
    feynman_phi3,
    partial_feynman,
    signed_deviation,
)
from chylab.binary_geometry import (
    BUILTIN_NAMES,
    builtin,
    random_facet_fixing,
    residuals,
    sample_solution,
)
from chylab.combinatorics import check_permutation, is_flag, is_pseudomanifold, is_pure
from chylab.core.config import Settings, get_settings
from chylab.core.exceptions import ChylabException, InvalidInputError
from chylab.core.logger import bind_run_context, setup_logging
from chylab.kinematics import (
    PlanarPoint,
    SubspaceSpec,
    planar_from_subspace,
    random_planar,
    random_point,
    random_positive_planar,
    s_from_x,
)
from chylab.moduli import PositivePoint, u_equation_residuals, u_from_y
from chylab.schemas import (
    ErrorReport,
    MandelstamJSON,
    PlanarJSON,
    RunReport,
    SolutionSetJSON,
    normalize_floats,
)
from chylab.scattering_form import (
    associahedron_check,
    injectivity_spot_check,
    pullback_coefficient,
)
from chylab.solver import SolverConfig, solve_all
from chylab.spinor import (
    four_point_duality,
    kk_identity_5pt,
    random_spinors,
    sector_census,
    u1_decoupling,
)
from chylab.strings import (
    DEFAULT_SCHEDULE,
    ft_limit,
    m0n_integrand,
    string_4pt_closed,
    stringy_integral,
)
from chylab.tropical import laplace_amplitude, positivity_check
from chylab.utils.decorators import timed, timing_scope

logger = get_logger()

Outcome = tuple[Any, dict[str, bool]]


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig.from_settings(seed=args.seed)


def _load_planar(args: argparse.Namespace) -> PlanarPoint | None:
    if not getattr(args, "x_file", None):
        return None
    path = Path(args.x_file)
    if not path.is_file():
        raise InvalidInputError(f"no such file: {path}", field="x-file")
    try:
        return PlanarJSON.model_validate_json(path.read_text()).to_point()
    except ValidationError as e:
        raise InvalidInputError(f"malformed planar JSON: {e}", field="x-file") from e


def _load_mandelstam(args: argparse.Namespace) -> Any:
    if not getattr(args, "s_file", None):
        return None
    path = Path(args.s_file)
    if not path.is_file():
        raise InvalidInputError(f"no such file: {path}", field="s-file")
    try:
        return MandelstamJSON.model_validate_json(path.read_text()).to_point()
    except ValidationError as e:
        raise InvalidInputError(f"malformed Mandelstam JSON: {e}", field="s-file") from e


def _parse_ordering(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.replace(" ", "").split(","))
    except ValueError as e:
        raise InvalidInputError(f"not a comma separated ordering: {text}", field="alpha") from e


# --------------------------------------------------------------------------- #
# 子命令
# --------------------------------------------------------------------------- #


@timed("kinematics_gen")
def cmd_kinematics_gen(args: argparse.Namespace, settings: Settings) -> Outcome:
    planar = random_planar(args.n, args.seed, args.range, generic=True)
    m = s_from_x(planar)
    results = {
        "planar": PlanarJSON.from_point(planar).model_dump(),
        "mandelstam": MandelstamJSON.from_point(m).model_dump(),
    }
    return results, {}


@timed("solve")
def cmd_solve(args: argparse.Namespace, settings: Settings) -> Outcome:
    m = _load_mandelstam(args) or random_point(args.n, args.seed, args.range)
    sols = solve_all(m, _solver_config(args))
    payload = SolutionSetJSON.from_solutions(sols).model_dump()
    return payload, {"complete": sols.complete}


@timed("amplitude")
def cmd_amplitude(args: argparse.Namespace, settings: Settings) -> Outcome:
    cfg = _solver_config(args)
    if args.kind == "feynman":
        planar = _load_planar(args) or random_planar(args.n, args.seed, args.range)
        return {"n": planar.n, "feynman": feynman_phi3(planar)}, {}

    if args.kind == "compare":
        rng = np.random.default_rng(args.seed)
        rows, worst = [], 0.0
        for trial in range(args.trials):
            sols = solve_all(random_point(args.n, rng, args.range), cfg)
            chy, feynman, deviation = compare(sols)
            worst = max(worst, deviation)
            rows.append({"trial": trial, "chy": chy, "feynman": feynman, "deviation": deviation})
        return {"n": args.n, "trials": rows, "max_deviation": worst}, {"agree": worst < args.tol}

    planar = _load_planar(args) or random_planar(args.n, args.seed, args.range, generic=True)
    sols = solve_all(s_from_x(planar), cfg)
    if args.kind == "chy":
        return {"n": planar.n, "chy": chy_scalar(sols)}, {"complete": sols.complete}

    alpha = check_permutation(_parse_ordering(args.alpha), planar.n) if args.alpha else None
    if alpha is None:
        raise InvalidInputError("amplitude partial needs --alpha", field="alpha")
    identity = list(range(1, planar.n + 1))
    chy = chy_partial(sols, identity, alpha)
    feynman = partial_feynman(planar, alpha)
    scale = abs(float(feynman_phi3(planar)))
    sign, deviation = signed_deviation(chy, feynman, scale)
    imaginary = abs(chy.imag) / max(scale, 1e-300)
    results = {
        "n": planar.n,
        "alpha": list(alpha),
        "chy": chy,
        "feynman": feynman,
        "sign": sign,
        "deviation": deviation,
        "imaginary": imaginary,
    }
    return results, {"agree": deviation < args.tol, "real": imaginary < args.tol}


@timed("uequations_check")
def cmd_uequations(args: argparse.Namespace, settings: Settings) -> Outcome:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    inside = True
    for _ in range(args.samples):
        u = u_from_y(PositivePoint.random(args.n, rng))
        worst = max(worst, max(abs(r) for r in u_equation_residuals(u).values()))
        values = np.real(u.values())
        inside &= bool(np.all((values > 0) & (values < 1)))
    results = {"n": args.n, "samples": args.samples, "max_residual": worst}
    return results, {"residual": worst < args.tol, "unit_interval": inside}


@timed("binary_check")
def cmd_binary(args: argparse.Namespace, settings: Settings) -> Outcome:
    sys_ = builtin(args.name)
    rng = np.random.default_rng(args.seed)
    witnesses, failures, worst = [], 0, 0.0
    for _ in range(args.samples):
        try:
            u = sample_solution(sys_, random_facet_fixing(sys_, rng), rng)
        except ChylabException as e:
            failures += 1
            logger.info("Witness attempt failed", name=args.name, error=e.detail)
            continue
        worst = max(worst, float(np.max(np.abs(residuals(sys_, u)))))
        witnesses.append(u.tolist())
    structure = {
        "flag": is_flag(sys_.complex),
        "pure": is_pure(sys_.complex),
        "pseudomanifold": is_pseudomanifold(sys_.complex),
    }
    results = {
        "name": args.name,
        "system": sys_.to_json(),
        "witnesses": witnesses,
        "failures": failures,
        "max_residual": worst,
    }
    return results, {**structure, "witnesses": bool(witnesses) and worst < args.tol}


@timed("trop_amplitude")
def cmd_trop(args: argparse.Namespace, settings: Settings) -> Outcome:
    planar = _load_planar(args) or random_positive_planar(args.n, args.seed, high=args.range)
    laplace = laplace_amplitude(planar)
    feynman = feynman_phi3(planar)
    results = {"n": planar.n, "laplace": laplace, "feynman": feynman}
    return results, {"positive": positivity_check(planar), "equal": laplace == feynman}


@timed("scatform_pullback")
def cmd_scatform(args: argparse.Namespace, settings: Settings) -> Outcome:
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.trials):
        pairs = SubspaceSpec.index_pairs(args.n)
        spec = SubspaceSpec(args.n, {p: Fraction(int(rng.integers(1, args.range + 1))) for p in pairs})
        fan = [Fraction(int(rng.integers(1, 2 * args.range + 1))) for _ in range(args.n - 3)]
        point = planar_from_subspace(spec, fan)
        if any(v == 0 for v in point.X.values()):
            continue
        coefficient = pullback_coefficient(spec, point)
        feynman = feynman_phi3(point)
        sign = 1 if coefficient == feynman else -1 if coefficient == -feynman else 0
        rows.append(
            {
                "c": {f"{i},{j}": v for (i, j), v in spec.c.items()},
                "pullback": coefficient,
                "feynman": feynman,
                "sign": sign,
            }
        )
    signs = {row["sign"] for row in rows}
    return {"n": args.n, "points": rows}, {"matches": bool(rows) and len(signs) == 1 and 0 not in signs}


@timed("scatmap_check")
def cmd_scatmap(args: argparse.Namespace, settings: Settings) -> Outcome:
    spec = SubspaceSpec.constant(args.n, Fraction(1))
    report = associahedron_check(spec, samples=args.samples, seed=args.seed)
    injective = injectivity_spot_check(spec, samples=min(args.samples, 50), seed=args.seed)
    results = {
        "n": args.n,
        "samples": args.samples,
        "min_value": report.min_value,
        "failures": report.failures,
    }
    return results, {"positive": report.all_positive, "boundary": report.boundary_ok, "injective": injective}


@timed("string")
def cmd_string(args: argparse.Namespace, settings: Settings) -> Outcome:
    planar = _load_planar(args) or random_positive_planar(args.n, args.seed, high=args.range)
    feynman = feynman_phi3(planar)
    if args.kind == "eval":
        alpha = float(args.alpha) if args.alpha else 0.1
        result = stringy_integral(m0n_integrand(planar, alpha))
        results: dict[str, Any] = {
            "n": planar.n,
            "alpha_prime": alpha,
            "value": result.value,
            "error": result.error,
            "low_accuracy": result.low_accuracy,
        }
        if planar.n == 4:
            s, t = (float(v) for _, v in planar.items())
            results["closed_form"] = string_4pt_closed(s, t, alpha)
        return results, {"accurate": not result.low_accuracy}

    limit = ft_limit(m0n_integrand(planar, DEFAULT_SCHEDULE[0]))
    deviation = abs(limit.value - float(feynman)) / abs(float(feynman))
    results = {
        "n": planar.n,
        "limit": limit.value,
        "feynman": feynman,
        "schedule": limit.schedule,
        "values": limit.values,
        "estimates": limit.tableau,
        "monotone": limit.monotone,
        "deviation": deviation,
    }
    return results, {"agree": deviation < args.tol}


@timed("sectors_census")
def cmd_sectors(args: argparse.Namespace, settings: Settings) -> Outcome:
    report = sector_census(args.n, args.trials, args.seed, _solver_config(args))
    results = {
        "n": args.n,
        "expected": report.expected,
        "counts": report.counts,
        "failures": report.failures,
        "failure_rate": report.failure_rate,
    }
    return results, {"eulerian": report.matches}


@timed("mhv_check")
def cmd_mhv(args: argparse.Namespace, settings: Settings) -> Outcome:
    p = random_spinors(args.n, args.seed)
    results: dict[str, Any] = {
        "n": args.n,
        "conservation": p.conservation_residual(),
        "u1_decoupling": u1_decoupling(p),
    }
    passed = {
        "conservation": results["conservation"] < args.tol,
        "u1_decoupling": results["u1_decoupling"] < args.tol,
    }
    if args.n == 4:
        results["four_point_duality"] = four_point_duality(p)
        passed["four_point_duality"] = results["four_point_duality"] < args.tol
    if args.n == 5:
        results["kk_identity"] = kk_identity_5pt(p)
        passed["kk_identity"] = results["kk_identity"] < args.tol
    return results, passed


@timed("accept")
def cmd_accept(args: argparse.Namespace, settings: Settings) -> Outcome:
    opts = AcceptanceOptions(
        seed=args.seed, points=args.trials, quick=args.quick, solver=_solver_config(args)
    )
    outcomes = run_acceptance(opts)
    results = {r.name: r.details for r in outcomes}
    return results, {r.name: r.passed for r in outcomes}


# --------------------------------------------------------------------------- #
# 解析器
# --------------------------------------------------------------------------- #


def _common(parser: argparse.ArgumentParser, *, n: int = 5, trials: int = 10, tol: float = 1e-8) -> None:
    parser.add_argument("--n", type=int, default=n, help="粒子数")
    parser.add_argument("--seed", type=int, default=0, help="随机种子")
    parser.add_argument("--trials", type=int, default=trials, help="随机试验次数")
    parser.add_argument("--tol", type=float, default=tol, help="通过判据的容差")
    parser.add_argument("--range", type=int, default=10, help="随机整数取值范围 [-R, R]")
    parser.add_argument("--json", action="store_true", help="输出 JSON")
    parser.add_argument("--timings", action="store_true", help="在报告中附带耗时")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chylab", description="Scattering equations, CHY and stringy amplitudes on M_{0,n}"
    )
    parser.add_argument("--version", action="version", version=f"chylab {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    kinematics = commands.add_parser("kinematics", help="随机运动学")
    kin_sub = kinematics.add_subparsers(dest="action", required=True)
    gen = kin_sub.add_parser("gen", help="生成随机整数平面坐标与 Mandelstam 变量")
    _common(gen, n=6)
    gen.set_defaults(handler=cmd_kinematics_gen)

    solve = commands.add_parser("solve", help="求散射方程的全部解")
    _common(solve, n=6)
    solve.add_argument("--s-file", help="Mandelstam JSON 文件")
    solve.set_defaults(handler=cmd_solve)

    amplitude = commands.add_parser("amplitude", help="φ³ 振幅")
    amplitude.add_argument("kind", choices=("chy", "feynman", "compare", "partial"))
    _common(amplitude, n=5, trials=20)
    amplitude.add_argument("--alpha", help="偏振幅的排序，如 2,1,3,4")
    amplitude.add_argument("--x-file", help="平面坐标 JSON 文件")
    amplitude.set_defaults(handler=cmd_amplitude)

    uequations = commands.add_parser("uequations", help="u 方程")
    u_sub = uequations.add_subparsers(dest="action", required=True)
    u_check = u_sub.add_parser("check", help="在随机正点检查 u 方程")
    _common(u_check, n=6, tol=1e-12)
    u_check.add_argument("--samples", type=int, default=20, help="采样点数")
    u_check.set_defaults(handler=cmd_uequations)

    binary = commands.add_parser("binary", help="二元几何")
    b_sub = binary.add_subparsers(dest="action", required=True)
    b_check = b_sub.add_parser("check", help="检查内置复形的结构并取样见证解")
    _common(b_check, tol=1e-10)
    b_check.add_argument("--name", choices=BUILTIN_NAMES, default="hexagon", help="内置复形")
    b_check.add_argument("--samples", type=int, default=5, help="见证解取样次数")
    b_check.set_defaults(handler=cmd_binary)

    trop = commands.add_parser("trop", help="热带几何")
    t_sub = trop.add_subparsers(dest="action", required=True)
    t_amp = t_sub.add_parser("amplitude", help="Laplace 型振幅与 Feynman 求和的精确比较")
    _common(t_amp, n=6)
    t_amp.add_argument("--x-file", help="平面坐标 JSON 文件")
    t_amp.set_defaults(handler=cmd_trop)

    scatform = commands.add_parser("scatform", help="散射形式")
    f_sub = scatform.add_subparsers(dest="action", required=True)
    pullback = f_sub.add_parser("pullback", help="拉回到 H(c) 并与 Feynman 求和比较")
    _common(pullback, trials=5)
    pullback.set_defaults(handler=cmd_scatform)

    scatmap = commands.add_parser("scatmap", help="散射映射")
    m_sub = scatmap.add_subparsers(dest="action", required=True)
    m_check = m_sub.add_parser("check", help="正区域映到结合多面体内部")
    _common(m_check, n=6)
    m_check.add_argument("--samples", type=int, default=100, help="采样点数")
    m_check.set_defaults(handler=cmd_scatmap)

    string = commands.add_parser("string", help="弦积分")
    string.add_argument("kind", choices=("eval", "ftlimit"))
    _common(string, n=4, tol=1e-3)
    string.add_argument("--alpha", help="α′（eval 使用）")
    string.add_argument("--x-file", help="平面坐标 JSON 文件")
    string.set_defaults(handler=cmd_string)

    sectors = commands.add_parser("sectors", help="四维扇区")
    s_sub = sectors.add_subparsers(dest="action", required=True)
    census = s_sub.add_parser("census", help="按扇区统计散射方程的解")
    _common(census, n=6)
    census.set_defaults(handler=cmd_sectors)

    mhv = commands.add_parser("mhv", help="MHV 振幅")
    h_sub = mhv.add_subparsers(dest="action", required=True)
    h_check = h_sub.add_parser("check", help="检查 Parke-Taylor 振幅的恒等式")
    _common(h_check, tol=1e-10)
    h_check.set_defaults(handler=cmd_mhv)

    accept = commands.add_parser("accept", help="运行完整验收套件")
    _common(accept, trials=20)
    accept.add_argument("--quick", action="store_true", help="缩小每项的采样规模")
    accept.set_defaults(handler=cmd_accept)
    return parser


def _command_name(args: argparse.Namespace) -> str:
    parts = [args.command]
    for attr in ("action", "kind"):
        value = getattr(args, attr, None)
        if value:
            parts.append(value)
    return " ".join(parts)


def _echo(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "json", "timings")}


def _render(payload: Any, as_json: bool) -> str:
    if as_json:
        return json.dumps(payload, sort_keys=True)
    lines = [f"command: {payload['command']}"]
    for name, ok in payload.get("passed", {}).items():
        lines.append(f"  {name}: {'PASS' if ok else 'FAIL'}")
    results = payload.get("results")
    if isinstance(results, dict):
        for key, value in results.items():
            lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
    else:
        lines.append(json.dumps(results, sort_keys=True))
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    """解析参数并运行子命令，返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    setup_logging(settings.log_level, settings.log_file, settings.environment)
    command = _command_name(args)
    bind_run_context(command=command, n=getattr(args, "n", None), seed=args.seed)
    logger.info("Command started")

    try:
        with timing_scope() as timings:
            results, passed = args.handler(args, settings)
    except ChylabException as e:
        logger.error("Command failed", error=e.code, detail=e.detail)
        report = ErrorReport(**e.to_dict())
        print(json.dumps(normalize_floats(report.model_dump(), settings.json_digits), sort_keys=True))
        return 1

    report = RunReport(
        command=command,
        config=_echo(args),
        results=results,
        passed=passed,
        timings=timings if args.timings else {},
    )
    payload = normalize_floats(report.model_dump(), settings.json_digits)
    print(_render(payload, args.json))
    logger.info("Command finished", ok=report.ok, timings=timings)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
