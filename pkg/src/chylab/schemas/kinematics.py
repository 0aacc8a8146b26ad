"""
运动学与解集模式模块

Mandelstam / 平面坐标 / 标记点 / 解集的 JSON 形状
"""

from fractions import Fraction
from typing import Any

from pydantic import BaseModel, Field, ValidationInfo, field_validator

from chylab.kinematics import MandelstamPoint, PlanarPoint
from chylab.moduli import ModuliPoint
from chylab.schemas.common import ComplexNumber
from chylab.solver import SolutionSet


def _exact(value: Any) -> Any:
    # 整数与 "p/q" 字符串读成 Fraction，其余保持浮点
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return value


class MandelstamJSON(BaseModel):
    """{"n": 5, "s": [[0, ...], ...]}"""

    n: int = Field(..., ge=4, description="粒子数")
    s: list[list[Any]] = Field(..., description="n×n Mandelstam 矩阵")

    @field_validator("s")
    @classmethod
    def validate_shape(cls, v: list[list[Any]], info: ValidationInfo) -> list[list[Any]]:
        n = info.data.get("n")
        if n is not None and (len(v) != n or any(len(row) != n for row in v)):
            raise ValueError(f"s must be {n}x{n}")
        return v

    def to_point(self) -> MandelstamPoint:
        rows = [[_exact(x) for x in row] for row in self.s]
        return MandelstamPoint.from_matrix(rows)

    @classmethod
    def from_point(cls, m: MandelstamPoint) -> "MandelstamJSON":
        return cls(n=m.n, s=[[x for x in row] for row in m.s.tolist()])


class PlanarJSON(BaseModel):
    """{"n": 5, "X": {"1,3": 2, ...}}"""

    n: int = Field(..., ge=4, description="粒子数")
    X: dict[str, Any] = Field(..., description="对角线 'i,j' -> X_ij")

    def to_point(self) -> PlanarPoint:
        return PlanarPoint.from_pairs(self.n, {k: _exact(v) for k, v in self.X.items()})

    @classmethod
    def from_point(cls, p: PlanarPoint) -> "PlanarJSON":
        return cls(n=p.n, X={d.key(): v for d, v in p.items()})


class SigmaJSON(BaseModel):
    """{"n": 5, "sigma": [[re, im], ...]}"""

    n: int = Field(..., ge=4, description="标记点个数")
    sigma: list[ComplexNumber] = Field(..., description="σ₃..σ_{n-1}")

    def to_point(self) -> ModuliPoint:
        return ModuliPoint.of(self.n, self.sigma)

    @classmethod
    def from_point(cls, p: ModuliPoint) -> "SigmaJSON":
        return cls(n=p.n, sigma=[complex(z) for z in p.sigma])


class SolutionSetJSON(BaseModel):
    """{"n": 6, "solutions": [[[re, im], ...]], "residuals": [...], "complete": true}"""

    n: int = Field(..., ge=4, description="粒子数")
    solutions: list[list[ComplexNumber]] = Field(default_factory=list, description="解")
    residuals: list[float] = Field(default_factory=list, description="归一化残差")
    expected: int = Field(..., ge=1, description="应有解数")
    complete: bool = Field(..., description="解数是否齐全")

    @classmethod
    def from_solutions(cls, sols: SolutionSet) -> "SolutionSetJSON":
        return cls(
            n=sols.n,
            solutions=[[complex(z) for z in p.sigma] for p in sols.solutions],
            residuals=list(sols.residual_norms),
            expected=sols.expected,
            complete=sols.complete,
        )
