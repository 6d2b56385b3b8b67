# models/metric_graph.py

import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

import networkx as nx # 用于连通性判断

from models.errors import GraphValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundedEdge:
    """紧核中的有界边 e，参数化为 I_e = [0, ℓ_e]，x=0 在 v1，x=ℓ_e 在 v2。"""
    name: str
    v1: str
    v2: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.v1 == self.v2


@dataclass(frozen=True)
class HalfLine:
    """半直线，x=0 在挂接顶点，向无穷延伸。"""
    name: str
    vertex: str


@dataclass(frozen=True)
class MetricGraph:
    """
    合法的度量图：连通、非紧（至少一条半直线）、有限条边、紧核非空。
    构造后不可变，可在并发查询间共享。
    """
    vertices: Tuple[str, ...]
    bounded_edges: Tuple[BoundedEdge, ...]
    half_lines: Tuple[HalfLine, ...]
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        # 统一按名称排序，保证 id 分配和自由度编号确定
        object.__setattr__(self, 'vertices', tuple(sorted(set(self.vertices))))
        object.__setattr__(self, 'bounded_edges', tuple(sorted(self.bounded_edges, key=lambda e: e.name)))
        object.__setattr__(self, 'half_lines', tuple(sorted(self.half_lines, key=lambda h: h.name)))
        if self.check:
            self.validate()

    @classmethod
    def build(cls, edges: List[Tuple[str, str, str, float]], half_lines: List[Tuple[str, str]],
              vertices: List[str] = ()) -> "MetricGraph":
        """
        从简单的元组列表构造图，顶点可以由边隐式给出。
        Args:
            edges: (name, v1, v2, length) 列表。
            half_lines: (name, vertex) 列表。
            vertices: 额外声明的顶点。
        """
        all_vertices = set(vertices)
        for _, v1, v2, _ in edges:
            all_vertices.update((v1, v2))
        for _, v in half_lines:
            all_vertices.add(v)
        return cls(
            vertices=tuple(all_vertices),
            bounded_edges=tuple(BoundedEdge(n, v1, v2, float(l)) for n, v1, v2, l in edges),
            half_lines=tuple(HalfLine(n, v) for n, v in half_lines),
        )

    def validate(self):
        """检查所有不变量，每种违反给出不同的诊断 kind。"""
        names = [e.name for e in self.bounded_edges] + [h.name for h in self.half_lines]
        if len(names) != len(set(names)):
            duplicated = sorted({n for n in names if names.count(n) > 1})
            raise GraphValidationError(f"边名称重复: {', '.join(duplicated)}", kind="duplicate name")

        for e in self.bounded_edges:
            if not math.isfinite(e.length) or e.length <= 0:
                raise GraphValidationError(f"边 {e.name} 的长度 {e.length} 必须是有限正数", kind="nonpositive length")
            for v in (e.v1, e.v2):
                if v not in self.vertices:
                    raise GraphValidationError(f"边 {e.name} 引用了未知顶点 {v}", kind="disconnected")
        for h in self.half_lines:
            if h.vertex not in self.vertices:
                raise GraphValidationError(f"半直线 {h.name} 引用了未知顶点 {h.vertex}", kind="disconnected")

        # 紧核非空
        if not self.bounded_edges:
            raise GraphValidationError("紧核为空，至少需要一条有界边 (empty compact core)", kind="empty compact core")
        # 非紧
        if not self.half_lines:
            raise GraphValidationError("图没有半直线，不满足非紧性 (no half-lines)", kind="no half-lines")
        # 连通：半直线不连接两个顶点，所以只需要看紧核加上所有顶点
        if not nx.is_connected(self.multigraph):
            components = nx.number_connected_components(self.multigraph)
            raise GraphValidationError(f"图不连通，共有 {components} 个连通分支 (disconnected)", kind="disconnected")

    @cached_property
    def multigraph(self) -> nx.MultiGraph:
        """紧核对应的组合多重图（包含所有顶点），边的 key 为边名称。"""
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.vertices)
        for e in self.bounded_edges:
            graph.add_edge(e.v1, e.v2, key=e.name, length=e.length)
        return graph

    @property
    def n_halflines(self) -> int:
        return len(self.half_lines)

    @property
    def core_length(self) -> float:
        """|K|：紧核总长度。"""
        return float(sum(e.length for e in self.bounded_edges))

    @cached_property
    def degrees(self) -> Dict[str, int]:
        """顶点的总度数：自环计 2，半直线计 1。"""
        degree = {v: 0 for v in self.vertices}
        for e in self.bounded_edges:
            degree[e.v1] += 1
            degree[e.v2] += 1
        for h in self.half_lines:
            degree[h.vertex] += 1
        return degree

    def edge(self, name: str) -> BoundedEdge:
        for e in self.bounded_edges:
            if e.name == name:
                return e
        raise KeyError(name)

    def scaled(self, factor: float) -> "MetricGraph":
        """所有有界边长度乘以 factor 的同胚图（用于位似变换测试）。"""
        return MetricGraph(
            vertices=self.vertices,
            bounded_edges=tuple(BoundedEdge(e.name, e.v1, e.v2, e.length * factor) for e in self.bounded_edges),
            half_lines=self.half_lines,
        )

    def with_edge_length(self, name: str, length: float) -> "MetricGraph":
        """替换某一条边的长度，用于构造 signpost 等族。"""
        return MetricGraph(
            vertices=self.vertices,
            bounded_edges=tuple(BoundedEdge(e.name, e.v1, e.v2, length if e.name == name else e.length)
                                for e in self.bounded_edges),
            half_lines=self.half_lines,
        )

    def __repr__(self):
        return (f"MetricGraph(V={len(self.vertices)}, E={len(self.bounded_edges)}, "
                f"N={self.n_halflines}, |K|={self.core_length:.4g})")
