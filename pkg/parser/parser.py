# parser/parser.py

import re
import math
import hashlib # 用于生成图内容哈希
import logging
from pathlib import Path
from typing import Dict, List, Tuple

from models.errors import GraphSyntaxError, GraphValidationError
from models.metric_graph import BoundedEdge, HalfLine, MetricGraph

# 获取当前模块的日志记录器
logger = logging.getLogger(__name__)

_TOKEN = re.compile(r'\S+')


class GraphParser:
    """
    解析行格式的图描述文档：
        vertex <name>
        edge <name> <v1> <v2> <length>
        halfline <name> <v>
    '#' 之后为注释，字段以空白分隔。
    """

    def __init__(self):
        # 实例化时初始化日志记录器
        self.logger = logging.getLogger(__name__)
        # 关键字到解析方法的分派表，新增关键字时在这里登记
        self._handlers = {
            'vertex': self._parse_vertex,
            'edge': self._parse_edge,
            'halfline': self._parse_halfline,
        }

    def _expect(self, tokens: List[Tuple[str, int]], count: int, lineno: int, line: str):
        """检查字段个数，不对时指向第一个缺失或多余字段的列。"""
        if len(tokens) < count:
            raise GraphSyntaxError(f"'{tokens[0][0]}' 需要 {count - 1} 个参数，只给了 {len(tokens) - 1} 个",
                                   lineno, len(line.rstrip()) + 1)
        if len(tokens) > count:
            raise GraphSyntaxError(f"多余的字段 '{tokens[count][0]}'", lineno, tokens[count][1])

    def _parse_vertex(self, tokens, lineno, line, state):
        self._expect(tokens, 2, lineno, line)
        name, column = tokens[1]
        if name in state['vertices']:
            raise GraphSyntaxError(f"顶点 '{name}' 重复声明", lineno, column)
        state['vertices'][name] = lineno

    def _parse_edge(self, tokens, lineno, line, state):
        self._expect(tokens, 5, lineno, line)
        (name, column), (v1, _), (v2, _), (raw_length, length_column) = tokens[1:]
        self._register_edge_name(name, lineno, column, state)
        try:
            length = float(raw_length)
        except ValueError:
            raise GraphSyntaxError(f"长度 '{raw_length}' 不是数字", lineno, length_column)
        if math.isnan(length) or math.isinf(length):
            raise GraphSyntaxError(f"长度 '{raw_length}' 必须是有限数", lineno, length_column)
        if length <= 0:
            raise GraphValidationError(f"第 {lineno} 行: 边 {name} 的长度 {length} 不是正数 (nonpositive length)",
                                       kind="nonpositive length")
        state['edges'].append(BoundedEdge(name, v1, v2, length))
        self._declare_implicit(state, lineno, v1, v2)

    def _parse_halfline(self, tokens, lineno, line, state):
        self._expect(tokens, 3, lineno, line)
        (name, column), (vertex, _) = tokens[1:]
        self._register_edge_name(name, lineno, column, state)
        state['half_lines'].append(HalfLine(name, vertex))
        self._declare_implicit(state, lineno, vertex)

    def _register_edge_name(self, name, lineno, column, state):
        if name in state['edge_names']:
            raise GraphSyntaxError(f"边名称 '{name}' 重复（首次出现在第 {state['edge_names'][name]} 行）", lineno, column)
        state['edge_names'][name] = lineno

    def _declare_implicit(self, state, lineno, *names):
        for v in names:
            if v not in state['vertices']:
                self.logger.debug(f"第 {lineno} 行隐式声明顶点 {v}")
                state['vertices'][v] = lineno

    def parse(self, text: str, source: str = "<string>") -> MetricGraph:
        """
        将图描述文档解析为 MetricGraph，并校验连通、非紧和紧核非空。
        Args:
            text (str): 文档内容。
            source (str): 来源（用于日志）。
        Returns:
            MetricGraph: 已校验的度量图。
        """
        state: Dict = {'vertices': {}, 'edges': [], 'half_lines': [], 'edge_names': {}}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0] # 去掉注释
            tokens = [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]
            if not tokens:
                continue
            keyword, column = tokens[0]
            handler = self._handlers.get(keyword)
            if handler is None:
                raise GraphSyntaxError(f"未知关键字 '{keyword}'", lineno, column)
            handler(tokens, lineno, line, state)

        graph = MetricGraph(
            vertices=tuple(state['vertices']),
            bounded_edges=tuple(state['edges']),
            half_lines=tuple(state['half_lines']),
        )
        self.logger.info(f"从 {source} 解析到 {graph}")
        return graph

    def serialize(self, graph: MetricGraph) -> str:
        """
        按名称排序输出规范化文档，parse(serialize(g)) == g。
        """
        lines = [f"vertex {v}" for v in graph.vertices]
        lines += [f"edge {e.name} {e.v1} {e.v2} {e.length!r}" for e in graph.bounded_edges]
        lines += [f"halfline {h.name} {h.vertex}" for h in graph.half_lines]
        return "\n".join(lines) + "\n"


_default_parser = GraphParser()


def parse_graph(text: str, source: str = "<string>") -> MetricGraph:
    return _default_parser.parse(text, source)


def serialize_graph(graph: MetricGraph) -> str:
    return _default_parser.serialize(graph)


def load_graph(path) -> MetricGraph:
    """从文件读取图描述文档。"""
    path = Path(path)
    return _default_parser.parse(path.read_text(encoding='utf-8'), str(path))


def graph_hash(graph: MetricGraph) -> str:
    """规范化文档的 SHA256，嵌入所有输出文档以便复现。"""
    return hashlib.sha256(serialize_graph(graph).encode('utf-8')).hexdigest()
