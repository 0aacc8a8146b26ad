"""
Schemas Package

命令行 JSON 输入输出使用的 Pydantic 模型
"""

from chylab.schemas.common import ComplexNumber, ErrorReport, RunReport, normalize_floats
from chylab.schemas.geometry import ComplexJSON, SystemJSON
from chylab.schemas.kinematics import MandelstamJSON, PlanarJSON, SigmaJSON, SolutionSetJSON

__all__ = [
    "ComplexJSON",
    "ComplexNumber",
    "ErrorReport",
    "MandelstamJSON",
    "PlanarJSON",
    "RunReport",
    "SigmaJSON",
    "SolutionSetJSON",
    "SystemJSON",
    "normalize_floats",
]
