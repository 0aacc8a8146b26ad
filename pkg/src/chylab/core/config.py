"""
配置管理模块

基于 Pydantic 的配置管理系统，支持 CHYLAB_ 前缀的环境变量和 .env 文件
"""

from typing import Any

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置类

    从环境变量和默认值加载配置
    支持多环境配置（development/production/testing）
    """

    # 应用基础配置
    app_name: str = Field(default="chylab", description="应用名称")
    app_version: str = Field(default="0.1.0", description="应用版本")
    environment: str = Field(default="production", description="运行环境")

    # 并行配置
    threads: int = Field(
        default=1, ge=1, le=256, description="求解与批量试验的最大并行线程数"
    )

    # 求解器默认值
    newton_tol: float = Field(default=1e-12, gt=0, description="牛顿残差阈值")
    dedup_tol: float = Field(default=1e-8, gt=0, description="解去重的距离阈值")
    max_newton_iters: int = Field(default=50, ge=1, description="牛顿最大迭代次数")
    continuation_steps: int = Field(default=40, ge=2, description="软极限延拓步数")
    max_restarts: int = Field(default=10, ge=0, description="γ 随机重启次数上限")

    # 数值容差
    rank_tol: float = Field(
        default=1e-7, gt=0, description="扇区拟合中判定零奇异值的相对阈值"
    )
    quad_epsrel: float = Field(default=1e-10, gt=0, description="一维积分相对精度")

    # 输出配置
    json_digits: int = Field(
        default=17, ge=1, le=17, description="JSON 输出浮点数的有效数字位数"
    )

    # 日志配置
    log_level: str = Field(default="WARNING", description="日志级别")
    log_file: str | None = Field(default=None, description="日志文件路径（可选）")

    model_config = SettingsConfigDict(
        env_prefix="CHYLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """验证日志级别是否有效"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """验证运行环境名称"""
        valid_envs = ["development", "production", "testing"]
        if v.lower() not in valid_envs:
            raise ValueError(f"environment must be one of {valid_envs}")
        return v.lower()

    @field_validator("threads", mode="before")
    @classmethod
    def parse_threads(cls, v: Any) -> Any:
        """空字符串视为默认单线程"""
        if isinstance(v, str) and not v.strip():
            return 1
        return v


# 全局配置实例缓存
_settings_instance: Settings | None = None


def get_settings() -> Settings:
    """获取配置单例实例

    使用懒加载模式，第一次调用时创建实例
    后续调用返回缓存的实例

    Returns:
        Settings: 配置实例
    """
    global _settings_instance
    if _settings_instance is None:
        _settings_instance = Settings()
    return _settings_instance


def reset_settings() -> None:
    """丢弃缓存的配置实例，下次 get_settings() 重新读取环境变量"""
    global _settings_instance
    _settings_instance = None
