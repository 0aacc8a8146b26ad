"""
计时装饰器模块

提供函数计时装饰器，把耗时记入当前计时作用域（供 RunReport 使用）并写入日志
"""

import time
from contextlib import contextmanager
from contextvars import ContextVar
from functools import wraps
from typing import Any, Callable, Iterator, TypeVar, cast

from structlog import get_logger

logger = get_logger()

F = TypeVar("F", bound=Callable[..., Any])

# 当前计时作用域；None 表示不收集
_timings: ContextVar[dict[str, float] | None] = ContextVar("chylab_timings", default=None)


@contextmanager
def timing_scope() -> Iterator[dict[str, float]]:
    """收集作用域内所有 @timed 函数的累计耗时（秒）

    Examples:
        >>> with timing_scope() as timings:
        >>>     run_solve(args)
        >>> timings["solve"]
    """
    collected: dict[str, float] = {}
    token = _timings.set(collected)
    try:
        yield collected
    finally:
        _timings.reset(token)


def timed(name: str | None = None) -> Callable[[F], F]:
    """函数计时装饰器

    Args:
        name: 计时键，默认为函数名

    Returns:
        装饰器函数
    """

    def decorator(func: F) -> F:
        key = name or func.__name__

        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.error("Function execution failed", function=key, error=str(e))
                raise
            finally:
                elapsed = time.perf_counter() - start
                collected = _timings.get()
                if collected is not None:
                    collected[key] = collected.get(key, 0.0) + elapsed
                logger.debug("Function timed", function=key, seconds=round(elapsed, 6))

        return cast(F, wrapper)

    return decorator
