"""
Core Package

包含配置、日志与异常模块
"""
