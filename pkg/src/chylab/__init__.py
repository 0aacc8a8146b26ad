"""
chylab

散射方程、CHY 振幅、φ³ 振幅、二元几何与弦积分的数值与精确计算库
"""

__version__ = "0.1.0"
