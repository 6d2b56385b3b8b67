# discretization/grid.py

import math
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, List, Tuple

import numpy as np

from models.errors import GridError
from models.metric_graph import MetricGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeGrid:
    """
    单条边上的均匀网格。nodes[k] 是第 k 个节点的全局自由度编号；
    半直线截断端（人工远端）取哨兵值 n_dofs，表示齐次 Dirichlet 节点。
    """
    name: str
    halfline: bool
    length: float
    n_elements: int
    nodes: np.ndarray

    @property
    def step(self) -> float:
        return self.length / self.n_elements

    @property
    def coordinates(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_elements + 1)

    @property
    def midpoints(self) -> np.ndarray:
        x = self.coordinates
        return 0.5 * (x[:-1] + x[1:])


class Grid:
    """
    度量图的离散化：每条边均匀剖分，汇于同一顶点的端点共享一个自由度（连续性条件）。
    自由度顺序：先顶点（按名称），再逐边的内部节点（先有界边后半直线，均按名称）。
    """

    def __init__(self, graph: MetricGraph, h: float, trunc: float, counts: Dict[str, int]):
        self.graph = graph
        self.h = float(h)
        self.trunc = float(trunc)
        self.logger = logging.getLogger(__name__)

        self.vertex_index = {v: i for i, v in enumerate(graph.vertices)}
        next_dof = len(graph.vertices)
        layout = []
        # 先给所有内部节点编号，Dirichlet 哨兵要等总数确定后再填
        for e in graph.bounded_edges:
            n = counts[e.name]
            interior = np.arange(next_dof, next_dof + n - 1)
            next_dof += n - 1
            layout.append((e.name, False, e.length, n, self.vertex_index[e.v1], interior, self.vertex_index[e.v2]))
        for hl in graph.half_lines:
            n = counts[hl.name]
            interior = np.arange(next_dof, next_dof + n - 1)
            next_dof += n - 1
            layout.append((hl.name, True, self.trunc, n, self.vertex_index[hl.vertex], interior, None))

        self.n_dofs = next_dof
        self.dirichlet = next_dof # 哨兵编号
        edges = []
        for name, is_half, length, n, start, interior, end in layout:
            end_index = self.dirichlet if end is None else end
            nodes = np.concatenate([[start], interior, [end_index]]).astype(np.int64)
            edges.append(EdgeGrid(name, is_half, float(length), int(n), nodes))
        self.edges: Tuple[EdgeGrid, ...] = tuple(edges)
        self.counts = dict(counts)

    # ------------------------------------------------------------------
    # 单元数组
    # ------------------------------------------------------------------

    @cached_property
    def left(self) -> np.ndarray:
        return np.concatenate([e.nodes[:-1] for e in self.edges])

    @cached_property
    def right(self) -> np.ndarray:
        return np.concatenate([e.nodes[1:] for e in self.edges])

    @cached_property
    def steps(self) -> np.ndarray:
        return np.concatenate([np.full(e.n_elements, e.step) for e in self.edges])

    @cached_property
    def core(self) -> np.ndarray:
        """单元是否属于紧核 K。"""
        return np.concatenate([np.full(e.n_elements, not e.halfline) for e in self.edges])

    @cached_property
    def element_edge(self) -> np.ndarray:
        return np.concatenate([np.full(e.n_elements, i) for i, e in enumerate(self.edges)])

    @property
    def n_elements(self) -> int:
        return int(self.left.size)

    @property
    def n_shared_nodes(self) -> int:
        """共享自由度个数：图顶点数加截断边界节点数。"""
        return len(self.graph.vertices) + self.graph.n_halflines

    @property
    def total_length(self) -> float:
        """截断后的图总长度 |G_trunc|。"""
        return float(self.steps.sum())

    def extend(self, u: np.ndarray) -> np.ndarray:
        """在末尾补上 Dirichlet 哨兵处的 0，便于按单元取值。"""
        return np.concatenate([u, np.zeros(1, dtype=u.dtype)])

    def element_values(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ext = self.extend(u)
        return ext[self.left], ext[self.right]

    def accumulate(self, index: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """按节点累加单元贡献，丢弃哨兵位置。"""
        if np.iscomplexobj(weights):
            return (np.bincount(index, weights.real, minlength=self.n_dofs + 1)[:self.n_dofs]
                    + 1j * np.bincount(index, weights.imag, minlength=self.n_dofs + 1)[:self.n_dofs])
        return np.bincount(index, weights, minlength=self.n_dofs + 1)[:self.n_dofs]

    # ------------------------------------------------------------------
    # 场的构造与导出
    # ------------------------------------------------------------------

    def interpolate(self, func) -> np.ndarray:
        """
        以 func(edge_grid, x) 在各边坐标上取值，拼成自由度向量；
        顶点取第一条出现的边上的值，Dirichlet 端忽略。
        """
        u = np.zeros(self.n_dofs)
        assigned = np.zeros(self.n_dofs + 1, dtype=bool)
        for e in self.edges:
            values = np.asarray(func(e, e.coordinates), dtype=float)
            fresh = ~assigned[e.nodes]
            target = e.nodes[fresh]
            keep = target < self.n_dofs
            u[target[keep]] = values[fresh][keep]
            assigned[e.nodes] = True
        return u

    def edge_samples(self, u: np.ndarray) -> Iterator[Tuple[str, float, complex]]:
        """逐边输出 (edge, x, value)，包括截断端的 0，用于 CSV。"""
        ext = self.extend(u)
        for e in self.edges:
            for x, value in zip(e.coordinates, ext[e.nodes]):
                yield e.name, float(x), value

    def refined(self) -> "Grid":
        """每个单元对分，得到嵌套的 P1 空间。"""
        return Grid(self.graph, self.h / 2, self.trunc, {k: 2 * n for k, n in self.counts.items()})

    def prolong(self, u: np.ndarray) -> np.ndarray:
        """把本网格上的场线性插值到 refined() 网格上（精确嵌入）。"""
        fine = self.refined()
        v = np.zeros(fine.n_dofs, dtype=u.dtype)
        ext = self.extend(u)
        for coarse_edge, fine_edge in zip(self.edges, fine.edges):
            values = ext[coarse_edge.nodes]
            refined_values = np.empty(2 * values.size - 1, dtype=u.dtype)
            refined_values[0::2] = values
            refined_values[1::2] = 0.5 * (values[:-1] + values[1:])
            keep = fine_edge.nodes < fine.n_dofs
            v[fine_edge.nodes[keep]] = refined_values[keep]
        return v

    def __repr__(self):
        return f"Grid(h={self.h}, trunc={self.trunc}, dofs={self.n_dofs}, elements={self.n_elements})"


def build_grid(g: MetricGraph, h: float, trunc: float) -> Grid:
    """
    为度量图建立均匀网格。每条有界边的步长调整为整除 ℓ_e 且不超过 h，
    至少 3 个单元（保证不少于 2 个内部节点）；半直线截断到 [0, trunc]。
    Args:
        g: 度量图。
        h: 目标步长。
        trunc: 半直线截断长度 L_trunc。
    Returns:
        Grid: 网格。
    """
    if not (h > 0 and math.isfinite(h)) or not (trunc > 0 and math.isfinite(trunc)):
        raise GridError(f"步长 h={h} 和截断长度 L_trunc={trunc} 必须为正")
    if trunc < 10 * h:
        raise GridError(f"截断长度 {trunc} 小于 10h = {10 * h}")

    counts = {}
    for e in g.bounded_edges:
        if e.length < 2 * h:
            raise GridError(f"边 {e.name} 长度 {e.length} 小于 2h = {2 * h} (edge shorter than 2h)",
                            kind="edge shorter than 2h")
        counts[e.name] = max(3, math.ceil(e.length / h - 1e-9))
    for hl in g.half_lines:
        counts[hl.name] = math.ceil(trunc / h - 1e-9)

    grid = Grid(g, h, trunc, counts)
    logger.debug(f"建立网格 {grid}")
    return grid
