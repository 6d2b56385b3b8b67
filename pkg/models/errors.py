# models/errors.py

from typing import Any, Optional


class GratwaveError(Exception):
    """
    所有图上驻波计算错误的基类。
    kind 是稳定的英文标签（供测试与退出码使用），message 是给人看的说明。
    """
    exit_code = 1
    kind = "error"

    def __init__(self, message: str, kind: Optional[str] = None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind
        self.message = message

    def __str__(self):
        return f"[{self.kind}] {self.message}"


class GraphSyntaxError(GratwaveError):
    """图描述文档的语法错误，带行号和列号（均从 1 开始）。"""
    exit_code = 2
    kind = "syntax"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"第 {line} 行第 {column} 列: {message}")
        self.line = line
        self.column = column


class GraphValidationError(GratwaveError):
    """图不连通、没有半直线、紧核为空或长度不合法；kind 为 disconnected、no half-lines 等英文标签。"""
    exit_code = 2


class GridError(GratwaveError):
    """离散网格参数不合法，例如边长小于 2h。"""
    exit_code = 2
    kind = "invalid grid"


class ParameterError(GratwaveError):
    """数值参数不满足模块前提条件。"""
    exit_code = 2
    kind = "parameter"


class RegimeRefused(GratwaveError):
    """临界情形下质量超出可计算范围，拒绝求解。"""
    exit_code = 3
    kind = "unbounded regime"


class SolverFailure(GratwaveError):
    """迭代求解失败；partial 保存已经得到的部分结果（如极限表的前几行）。"""
    exit_code = 4
    kind = "non-convergence"

    def __init__(self, message: str, kind: Optional[str] = None, partial: Any = None):
        super().__init__(message, kind)
        self.partial = partial
