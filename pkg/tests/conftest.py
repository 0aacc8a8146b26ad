"""
chylab test fixtures and configuration

提供测试共享的 fixtures：可复现的随机数发生器、配置重置与快速求解器配置
"""

import os

import numpy as np
import pytest

from chylab.core.config import reset_settings
from chylab.solver import SolverConfig

# 测试期间固定单线程、关闭冗余日志
os.environ.setdefault("CHYLAB_THREADS", "1")
os.environ.setdefault("CHYLAB_LOG_LEVEL", "WARNING")


@pytest.fixture
def rng():
    """固定种子的 numpy 随机数发生器"""
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def fresh_settings():
    """每个测试前后丢弃缓存的配置实例"""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def clean_env(monkeypatch):
    """清理 CHYLAB_ 前缀的环境变量"""
    for key in list(os.environ):
        if key.startswith("CHYLAB_"):
            monkeypatch.delenv(key, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def solver_cfg():
    """测试用求解器配置（固定种子）"""
    return SolverConfig(seed=7)
