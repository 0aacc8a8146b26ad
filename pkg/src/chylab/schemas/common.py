"""
通用报告模式模块

定义运行报告、错误报告与复数 / 浮点的序列化约定
"""

from fractions import Fraction
from typing import Annotated, Any

from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer


def _parse_complex(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex numbers serialize as [re, im]")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


# 复数序列化为 [re, im]
ComplexNumber = Annotated[
    complex,
    BeforeValidator(_parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


def normalize_floats(value: Any, digits: int = 17) -> Any:
    """递归把浮点数规整到给定有效位数，复数写成 [re, im]，有理数写成 "p/q" 或整数"""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, complex):
        return [normalize_floats(value.real, digits), normalize_floats(value.imag, digits)]
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {str(k): normalize_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize_floats(v, digits) for v in value]
    if hasattr(value, "tolist"):
        return normalize_floats(value.tolist(), digits)
    return value


class ErrorReport(BaseModel):
    """错误报告

    Attributes:
        error (str): 错误码
        detail (str): 错误详情
        extra (dict | None): 额外诊断数据
    """

    error: str = Field(..., description="错误码")
    detail: str = Field(..., description="错误详情")
    extra: dict[str, Any] | None = Field(default=None, description="额外诊断数据")


class RunReport(BaseModel):
    """一次命令运行的报告

    Attributes:
        command (str): 子命令
        config (dict): 参数与配置回显
        results (Any): 结果表
        passed (dict[str, bool]): 各判据是否通过
        timings (dict[str, float]): 各阶段耗时（秒）
    """

    command: str = Field(..., description="子命令")
    config: dict[str, Any] = Field(default_factory=dict, description="参数回显")
    results: Any = Field(default=None, description="结果")
    passed: dict[str, bool] = Field(default_factory=dict, description="判据是否通过")
    timings: dict[str, float] = Field(default_factory=dict, description="耗时（秒）")

    @property
    def ok(self) -> bool:
        return all(self.passed.values())
