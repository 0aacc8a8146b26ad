"""
核心异常测试

测试范围：
- 自定义异常类的层次
- 异常的错误码和消息
- 附加字段与诊断字典
"""

import pytest

from chylab.core.exceptions import (
    ChylabException,
    ClassificationError,
    ConvergenceError,
    DivergentIntegralError,
    GenerationError,
    GenericityError,
    IncompleteSolutionError,
    InvalidInputError,
    OrientationError,
    PoleError,
    UnsupportedError,
)


class TestChylabException:
    """测试基础异常类"""

    def test_is_exception_subclass(self):
        """测试 ChylabException 是 Exception 的子类"""
        assert isinstance(ChylabException("test message"), Exception)

    def test_stores_message(self):
        """测试异常存储消息"""
        exc = ChylabException("Test error message")
        assert str(exc) == "Test error message"
        assert exc.detail == "Test error message"

    def test_default_code(self):
        """测试默认错误码"""
        assert ChylabException("test").code == "chylab_error"

    def test_custom_code(self):
        """测试可以设置自定义错误码"""
        assert ChylabException("test", code="custom").code == "custom"

    def test_to_dict(self):
        """测试诊断字典"""
        exc = ChylabException("boom", extra={"n": 5})
        assert exc.to_dict() == {"error": "chylab_error", "detail": "boom", "extra": {"n": 5}}
        assert ChylabException("boom").to_dict() == {"error": "chylab_error", "detail": "boom"}


class TestSubclasses:
    """测试各子类的错误码"""

    @pytest.mark.parametrize(
        "cls,code",
        [
            (InvalidInputError, "invalid_input"),
            (OrientationError, "orientation_inconsistent"),
            (GenerationError, "generation_failed"),
            (GenericityError, "non_generic"),
            (PoleError, "pole"),
            (ConvergenceError, "no_convergence"),
            (DivergentIntegralError, "divergent"),
            (UnsupportedError, "unsupported"),
            (ClassificationError, "classification_failed"),
        ],
    )
    def test_codes(self, cls, code):
        """测试错误码与继承关系"""
        exc = cls("detail")
        assert exc.code == code
        assert isinstance(exc, ChylabException)

    def test_invalid_input_field(self):
        """测试 InvalidInputError 记录参数名"""
        exc = InvalidInputError("bad n", field="n")
        assert exc.field == "n"
        assert exc.code == "invalid_input"

    def test_convergence_residual(self):
        """测试 ConvergenceError 记录残差"""
        exc = ConvergenceError("diverged", residual=1e-3)
        assert exc.residual == 1e-3

    def test_incomplete_solution_extra(self):
        """测试 IncompleteSolutionError 把个数写入诊断"""
        exc = IncompleteSolutionError("missing", found=4, expected=6)
        assert exc.found == 4
        assert exc.to_dict()["extra"] == {"found": 4, "expected": 6}

    def test_can_be_caught_as_base(self):
        """测试可以按基类捕获"""
        with pytest.raises(ChylabException):
            raise PoleError("pole")
