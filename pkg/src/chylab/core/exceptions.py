"""
核心异常模块

定义 chylab 的异常层次，每个异常携带错误码，命令行据此生成诊断 JSON
"""

from typing import Any


class ChylabException(Exception):
    """基础异常类

    所有自定义异常的基类

    Attributes:
        detail (str): 错误详情
        code (str): 机器可读的错误码
        extra (dict | None): 额外数据
    """

    default_code = "chylab_error"

    def __init__(
        self,
        detail: str,
        *,
        code: str | None = None,
        extra: dict[str, Any] | None = None,
    ) -> None:
        self.detail = detail
        self.code = code or self.default_code
        self.extra = extra
        super().__init__(detail)

    def __str__(self) -> str:
        return self.detail

    def to_dict(self) -> dict[str, Any]:
        """转换为诊断字典"""
        payload: dict[str, Any] = {"error": self.code, "detail": self.detail}
        if self.extra:
            payload["extra"] = self.extra
        return payload


class InvalidInputError(ChylabException):
    """输入无效异常

    非法多边形、非法翻转、不在复形中的面、非排列、不在 H(c) 上的点等

    Attributes:
        detail (str): 错误详情
        field (str | None): 出错的参数名
    """

    default_code = "invalid_input"

    def __init__(
        self,
        detail: str,
        *,
        field: str | None = None,
        extra: dict[str, Any] | None = None,
    ) -> None:
        self.field = field
        super().__init__(detail, extra=extra)


class OrientationError(ChylabException):
    """定向传播不一致

    沿翻转图做广度优先传播时同一三角剖分得到两个不同符号
    """

    default_code = "orientation_inconsistent"


class GenerationError(ChylabException):
    """随机运动学生成失败（有限次重试后仍退化）"""

    default_code = "generation_failed"


class GenericityError(ChylabException):
    """运动学不在一般位置

    某个通道 s_A 为零，或延拓路径坍缩到同一个解，解的个数少于 (n-3)!
    """

    default_code = "non_generic"


class PoleError(ChylabException):
    """在极点处求值

    标记点重合、传播子分母为零、形式在解处有极点
    """

    default_code = "pole"


class ConvergenceError(ChylabException):
    """数值迭代不收敛

    牛顿迭代发散、延拓路径丢失、二元几何取样找不到见证解

    Attributes:
        detail (str): 错误详情
        residual (float | None): 最后一次残差
    """

    default_code = "no_convergence"

    def __init__(
        self,
        detail: str,
        *,
        residual: float | None = None,
        extra: dict[str, Any] | None = None,
    ) -> None:
        self.residual = residual
        super().__init__(detail, extra=extra)


class IncompleteSolutionError(ChylabException):
    """解集不完整时拒绝计算 CHY 求和

    Attributes:
        found (int): 找到的解个数
        expected (int): 应有的解个数 (n-3)!
    """

    default_code = "incomplete_solution_set"

    def __init__(self, detail: str, *, found: int, expected: int) -> None:
        self.found = found
        self.expected = expected
        super().__init__(detail, extra={"found": found, "expected": expected})


class DivergentIntegralError(ChylabException):
    """热带势不为正，弦积分发散"""

    default_code = "divergent"


class UnsupportedError(ChylabException):
    """超出支持范围（一般势的正性检查 d > 2，求积维数 d > 3）"""

    default_code = "unsupported"


class ClassificationError(ChylabException):
    """扇区分类失败（非一般位置）"""

    default_code = "classification_failed"
