"""
Utils Package

通用工具（计时装饰器等）
"""
