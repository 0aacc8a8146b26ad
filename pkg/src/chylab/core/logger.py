"""
日志配置模块

基于 structlog 提供结构化日志功能

日志统一写到 stderr，stdout 只留给命令行的报告输出。
一次命令运行内的公共字段（子命令、n、种子）通过 contextvars 绑定，
自动附加到该次运行的每条日志上。
"""

import logging
import sys
from fractions import Fraction
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from structlog.types import EventDict, Processor

APP_NAME = "chylab"


def add_app_context(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """添加应用名到日志记录"""
    event_dict["app"] = APP_NAME
    return event_dict


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def normalize_numeric_values(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """把 numpy 数组/标量、复数和有理数转换成可写入 JSON 的值

    复数写成 [re, im]，有理数写成 "p/q"，与报告输出的约定一致
    """
    return {key: _plain(value) for key, value in event_dict.items()}


def bind_run_context(**values: Any) -> None:
    """为当前命令运行绑定公共日志字段（会先清除上一次运行的字段）"""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(**values)


def clear_run_context() -> None:
    structlog.contextvars.clear_contextvars()


def _build_handlers(
    level: int, log_file: str | None, max_bytes: int, backup_count: int
) -> list[logging.Handler]:
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(level)
    handlers: list[logging.Handler] = [console]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
        file_handler.setLevel(level)
        handlers.append(file_handler)
    return handlers


def _build_processors(environment: str) -> list[Processor]:
    renderer: Processor = (
        structlog.dev.ConsoleRenderer()
        if environment == "development"
        else structlog.processors.JSONRenderer()
    )
    return [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_log_level,
        add_app_context,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        normalize_numeric_values,
        renderer,
    ]


def setup_logging(
    log_level: str = "WARNING",
    log_file: str | None = None,
    environment: str = "production",
    max_bytes: int = 10485760,  # 10MB
    backup_count: int = 5,
) -> logging.Logger:
    """配置 structlog 日志系统

    Args:
        log_level: 日志级别字符串，未知级别按 WARNING 处理
        log_file: 日志文件路径（可选，按大小轮转）
        environment: 运行环境；development 输出可读文本，其余输出 JSON 行
        max_bytes: 日志文件最大字节数
        backup_count: 保留的备份文件数量

    Returns:
        logging.Logger: 配置好的 root logger
    """
    level = getattr(logging, log_level.upper(), logging.WARNING)
    if not isinstance(level, int):
        level = logging.WARNING

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
    for handler in _build_handlers(level, log_file, max_bytes, backup_count):
        root_logger.addHandler(handler)

    structlog.configure(
        processors=_build_processors(environment),
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    return root_logger


def get_logger(name: str) -> logging.Logger:
    """获取标准库日志记录器实例"""
    return logging.getLogger(name)
