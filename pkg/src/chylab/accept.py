"""
验收套件模块

把各模块的交叉校验汇总为十二项判据，命令行 `accept` 子命令运行全部判据并生成 RunReport
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Any, Callable

import numpy as np
from structlog import get_logger

from chylab.amplitudes import (
    chy_partial,
    chy_scalar,
    chy_scalar_finite,
    feynman_phi3,
    partial_feynman,
    signed_deviation,
)
from chylab.binary_geometry import builtin, random_facet_fixing, residuals, sample_solution
from chylab.combinatorics import is_flag, is_pseudomanifold, is_pure, orientation_signs
from chylab.core.exceptions import ChylabException
from chylab.kinematics import (
    MandelstamPoint,
    SubspaceSpec,
    planar_from_subspace,
    random_planar,
    random_point,
    random_positive_planar,
    s_from_x,
)
from chylab.moduli import ModuliPoint, PositivePoint, u_equation_residuals, u_from_y
from chylab.scattering_form import associahedron_check, pullback_coefficient, scattering_map
from chylab.solver import SolverConfig, hessian, scattering_residuals, solve_all
from chylab.spinor import (
    brackets,
    four_point_duality,
    gram_rank,
    kk_identity_5pt,
    mhv_partial,
    random_spinors,
    s_from_spinors,
    sector_census,
    u1_decoupling,
    veronese_orthogonality,
)
from chylab.strings import ft_limit, m0n_integrand, string_4pt, string_4pt_closed
from chylab.tropical import laplace_amplitude
from chylab.utils.decorators import timed

logger = get_logger()


@dataclass
class CriterionResult:
    """单项判据的结果"""

    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)


@dataclass
class AcceptanceOptions:
    """验收规模：points 为每个 n 的随机点数，quick 时全部缩小"""

    seed: int = 0
    points: int = 20
    quick: bool = False
    solver: SolverConfig | None = None

    def count(self, full: int) -> int:
        return max(1, min(full, self.points) // (5 if self.quick else 1))


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


@timed("solution_counts")
def check_solution_counts(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed)
    worst = 0.0
    counts: dict[int, list[int]] = {}
    ok = True
    for n, full in ((4, 20), (5, 20), (6, 20), (7, 20), (8, 3)):
        found = []
        for _ in range(opts.count(full)):
            sols = solve_all(random_point(n, rng), opts.solver)
            found.append(len(sols.solutions))
            ok &= sols.complete and all(r < 1e-12 for r in sols.residual_norms)
            worst = max([worst, *sols.residual_norms])
        counts[n] = found
    return CriterionResult("solution_counts", ok, {"counts": counts, "max_residual": worst})


@timed("chy_feynman")
def check_chy_feynman(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 1)
    details: dict[str, Any] = {}
    ok = True
    for n in range(4, 8):
        signs, worst = set(), 0.0
        for _ in range(opts.count(20)):
            planar = random_planar(n, rng, generic=True)
            feynman = float(feynman_phi3(planar))
            chy = chy_scalar(solve_all(s_from_x(planar), opts.solver))
            sign = 1 if chy.real * feynman > 0 else -1
            signs.add(sign)
            worst = max(worst, _rel(chy, sign * feynman))
        ok &= len(signs) == 1 and worst < 1e-8
        details[str(n)] = {"signs": sorted(signs), "max_rel": worst}
    four = MandelstamPoint.from_matrix([[0, 2, -5, 3], [2, 0, 3, -5], [-5, 3, 0, 2], [3, -5, 2, 0]])
    value = chy_scalar(solve_all(four, opts.solver))
    closed = abs(value + 5 / 6) < 1e-12
    details["n4_closed"] = [value.real, value.imag]
    return CriterionResult("chy_feynman", ok and closed, details)


@timed("partials")
def check_partials(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 2)
    worst, worst_imag = 0.0, 0.0
    consistent, reflected = True, True
    for n in (4, 5):
        identity = list(range(1, n + 1))
        signs: dict[tuple[int, ...], set[int]] = {}
        for _ in range(max(2, opts.count(3))):
            planar = random_planar(n, rng, generic=True)
            sols = solve_all(s_from_x(planar), opts.solver)
            scale = abs(float(feynman_phi3(planar)))
            for alpha in permutations(identity):
                chy = chy_partial(sols, identity, alpha)
                sign, deviation = signed_deviation(chy, partial_feynman(planar, alpha), scale)
                worst = max(worst, deviation)
                worst_imag = max(worst_imag, abs(chy.imag) / scale)
                signs.setdefault(alpha, set()).add(sign)
        consistent &= all(len(seen) == 1 for seen in signs.values())
        # m(1⋯n|αᵀ) = (-1)ⁿ m(1⋯n|α)，而兼容三角剖分不变
        for alpha, seen in signs.items():
            mirror = signs[tuple(reversed(alpha))]
            reflected &= {(-1) ** n * s for s in seen} == mirror
    ok = worst < 1e-8 and worst_imag < 1e-8 and consistent and reflected
    details = {
        "max_rel": worst,
        "max_imag": worst_imag,
        "sign_fixed": consistent,
        "reflection": reflected,
    }
    return CriterionResult("partials", ok, details)


@timed("laplace")
def check_laplace(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 3)
    mismatches = 0
    total = 0
    for n in range(4, 9):
        for _ in range(opts.count(100) if n < 8 else opts.count(20)):
            planar = random_positive_planar(n, rng, denominator=7)
            total += 1
            mismatches += laplace_amplitude(planar) != feynman_phi3(planar)
    return CriterionResult("laplace", mismatches == 0, {"points": total, "mismatches": mismatches})


def _positive_spec(n: int, rng: np.random.Generator) -> SubspaceSpec:
    pairs = SubspaceSpec.index_pairs(n)
    return SubspaceSpec(n, {p: Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 4))) for p in pairs})


@timed("pullback")
def check_pullback(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 4)
    signs: dict[str, list[int]] = {}
    ok = True
    for n in range(4, 8):
        found = set()
        for _ in range(opts.count(10)):
            spec = _positive_spec(n, rng)
            point = planar_from_subspace(spec, [Fraction(int(rng.integers(1, 20))) for _ in range(n - 3)])
            if any(v == 0 for v in point.X.values()):
                continue
            coefficient = pullback_coefficient(spec, point)
            feynman = feynman_phi3(point)
            if coefficient == feynman:
                found.add(1)
            elif coefficient == -feynman:
                found.add(-1)
            else:
                ok = False
        ok &= len(found) == 1
        signs[str(n)] = sorted(found)
    return CriterionResult("pullback", ok, {"signs": signs})


@timed("u_equations")
def check_u_equations(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 5)
    worst = 0.0
    inside = True
    for n in range(4, 9):
        for _ in range(opts.count(20)):
            u = u_from_y(PositivePoint.random(n, rng))
            worst = max(worst, max(abs(r) for r in u_equation_residuals(u).values()))
            values = np.real(u.values())
            inside &= bool(np.all((values > 0) & (values < 1)))
    u5 = u_from_y(PositivePoint.of(5, [1.0, 1.0]))
    expected = {(1, 3): 3 / 4, (1, 4): 2 / 3, (2, 4): 1 / 2, (2, 5): 1 / 2, (3, 5): 2 / 3}
    exact = all(abs(u5.get(*k) - v) < 1e-12 for k, v in expected.items())
    return CriterionResult(
        "u_equations", worst < 1e-12 and inside and exact, {"max_residual": worst, "u5": exact}
    )


@timed("binary")
def check_binary(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 6)
    details: dict[str, Any] = {}
    ok = True
    for name in ("hexagon", "octagon", "pell3"):
        sys_ = builtin(name)
        structure = is_flag(sys_.complex) and is_pure(sys_.complex) and is_pseudomanifold(sys_.complex)
        worst, failures = 0.0, 0
        for _ in range(5):
            try:
                witness = sample_solution(sys_, random_facet_fixing(sys_, rng), rng)
                worst = max(worst, float(np.max(np.abs(residuals(sys_, witness)))))
            except ChylabException:
                failures += 1
        ok &= structure and failures == 0 and worst < 1e-10
        details[name] = {"structure": structure, "failures": failures, "max_residual": worst}
    return CriterionResult("binary", ok, details)


@timed("scattering_map")
def check_scattering_map(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 7)
    ok = True
    details: dict[str, Any] = {}
    for n in (5, 6):
        report = associahedron_check(_positive_spec(n, rng), samples=100, seed=opts.seed)
        planar = random_planar(n, rng, generic=True)
        m = s_from_x(planar)
        worst = 0.0
        for sol in solve_all(m, opts.solver).solutions:
            image = scattering_map(m, sol)
            worst = max(worst, max(abs(image.X[d] - float(v)) for d, v in planar.X.items()))
        ok &= report.passed and worst < 1e-8
        details[str(n)] = {"positive": report.all_positive, "round_trip": worst}
    return CriterionResult("scattering_map", ok, details)


@timed("strings")
def check_strings(opts: AcceptanceOptions) -> CriterionResult:
    worst = 0.0
    for s in (0.5, 1.0, 2.0, 3.0):
        for t in (0.5, 1.0, 2.0, 3.0):
            for alpha in (0.05, 0.1, 0.5):
                worst = max(worst, _rel(string_4pt(s, t, alpha).value, string_4pt_closed(s, t, alpha)))
    four = ft_limit(lambda a: string_4pt(2.0, 3.0, a).value)
    rng = np.random.default_rng(opts.seed + 8)
    planar = random_positive_planar(5, rng, high=5)
    five = ft_limit(m0n_integrand(planar, 0.2), epsrel=1e-8)
    target = float(feynman_phi3(planar))
    ok = worst < 1e-6 and abs(four.value - 5 / 6) < 1e-4 and _rel(five.value, target) < 0.01
    return CriterionResult(
        "strings",
        ok,
        {"beta_max_rel": worst, "ft4": four.value, "ft5": five.value, "feynman5": target},
    )


@timed("sectors")
def check_sectors(opts: AcceptanceOptions) -> CriterionResult:
    details: dict[str, Any] = {}
    ok = True
    for n, full in ((5, 10), (6, 10), (7, 3)):
        report = sector_census(n, opts.count(full), opts.seed + n, opts.solver)
        ok &= report.matches and report.failures == 0
        details[str(n)] = {"expected": report.expected, "counts": report.counts}
    return CriterionResult("sectors", ok, details)


@timed("spinor_identities")
def check_spinor_identities(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 9)
    worst, ranks = 0.0, True
    for _ in range(opts.count(20)):
        p4, p5, p6 = (random_spinors(n, rng) for n in (4, 5, 6))
        worst = max(
            worst,
            p6.conservation_residual(),
            u1_decoupling(p4),
            u1_decoupling(p6, 2, 5),
            kk_identity_5pt(p5),
            four_point_duality(p4),
            four_point_duality(p4, 1, 3),
        )
        angle, square = brackets(p5)
        worst = max(worst, float(np.max(np.abs(angle * square - s_from_spinors(p5).as_array()))))
        ranks &= gram_rank(s_from_spinors(p6)) == 4
        reordered = mhv_partial(p5, (2, 3, 4, 5, 1), 1, 2)
        worst = max(worst, _rel(reordered, mhv_partial(p5, (1, 2, 3, 4, 5), 1, 2)))
    sigma = rng.normal(size=6) + 1j * rng.normal(size=6)
    t = rng.normal(size=6) + 1j * rng.normal(size=6)
    ortho = max(veronese_orthogonality(sigma, t, d) for d in (1, 2, 3))
    return CriterionResult(
        "spinor_identities",
        worst < 1e-10 and ranks and ortho < 1e-8,
        {"max_rel": worst, "gram_rank_4": ranks, "orthogonality": ortho},
    )


@timed("invariance")
def check_invariance(opts: AcceptanceOptions) -> CriterionResult:
    rng = np.random.default_rng(opts.seed + 10)
    det_worst, fd_worst = 0.0, 0.0
    for n in (5, 6):
        sols = solve_all(random_point(n, rng), opts.solver)
        reference = chy_scalar(sols)
        for rows, cols in (((1, 2, 3), (1, 2, 3)), ((2, 4, n), (2, 4, n)), ((1, 3, 5), (2, 3, 4))):
            det_worst = max(det_worst, _rel(chy_scalar_finite(sols, rows=rows, cols=cols), reference))
        p, m = sols.solutions[0], sols.kinematics
        h = 1e-6
        numeric = np.zeros((n - 3, n - 3), dtype=complex)
        for a in range(n - 3):
            step = np.zeros(n - 3, dtype=complex)
            step[a] = h
            plus = scattering_residuals(ModuliPoint.of(n, p.sigma + step, check=False), m)
            minus = scattering_residuals(ModuliPoint.of(n, p.sigma - step, check=False), m)
            numeric[a] = (plus - minus) / (2 * h)
        exact = hessian(p, m)
        fd_worst = max(fd_worst, float(np.max(np.abs(numeric - exact)) / np.max(np.abs(exact))))
    orientation = True
    for n in range(4, 9):
        try:
            orientation_signs(n)
        except ChylabException:
            orientation = False
    ok = det_worst < 1e-8 and fd_worst < 1e-5 and orientation
    return CriterionResult(
        "invariance", ok, {"det_choice": det_worst, "hessian_fd": fd_worst, "orientation": orientation}
    )


CRITERIA: tuple[Callable[[AcceptanceOptions], CriterionResult], ...] = (
    check_solution_counts,
    check_chy_feynman,
    check_partials,
    check_laplace,
    check_pullback,
    check_u_equations,
    check_binary,
    check_scattering_map,
    check_strings,
    check_sectors,
    check_spinor_identities,
    check_invariance,
)


def run_acceptance(opts: AcceptanceOptions) -> list[CriterionResult]:
    """依次运行全部判据；单项抛出的 ChylabException 记为该项失败"""
    results = []
    for criterion in CRITERIA:
        try:
            result = criterion(opts)
        except ChylabException as e:
            result = CriterionResult(criterion.__name__.removeprefix("check_"), False, e.to_dict())
        logger.info("Acceptance criterion", name=result.name, passed=result.passed)
        results.append(result)
    return results
