"""
单纯复形与 u 方程组模式模块
"""

from typing import Any

from pydantic import BaseModel, Field

from chylab.binary_geometry import UEquationSystem
from chylab.combinatorics import SimplicialComplex


def _label(value: Any) -> Any:
    # JSON 里的顶点标签：整数、字符串，或 [i, j] 形式的对角线
    if isinstance(value, list):
        return tuple(value)
    if isinstance(value, str) and value.lstrip("-").isdigit():
        return int(value)
    return value


class ComplexJSON(BaseModel):
    """{"vertices": [...], "facets": [[...], ...]}"""

    vertices: list[Any] = Field(default_factory=list, description="顶点标签")
    facets: list[list[Any]] = Field(..., description="极大面")

    def to_complex(self) -> SimplicialComplex:
        facets = [[_label(v) for v in f] for f in self.facets]
        vertices = [_label(v) for v in self.vertices] or None
        return SimplicialComplex.from_facets(facets, vertices=vertices)

    @classmethod
    def from_complex(cls, c: SimplicialComplex) -> "ComplexJSON":
        return cls(**c.to_json())


class SystemJSON(BaseModel):
    """{"facets": [[...]], "exponents": {"i,j": a}}"""

    vertices: list[Any] = Field(default_factory=list, description="顶点标签")
    facets: list[list[Any]] = Field(..., description="极大面")
    exponents: dict[str, int] = Field(default_factory=dict, description="有序不相容对 -> 指数")

    def to_system(self) -> UEquationSystem:
        complex_ = ComplexJSON(vertices=self.vertices, facets=self.facets).to_complex()
        exps = {}
        for key, a in self.exponents.items():
            i, j = (part.strip() for part in key.split(",", 1))
            exps[(_label(i), _label(j))] = a
        return UEquationSystem.build(complex_, exps)
