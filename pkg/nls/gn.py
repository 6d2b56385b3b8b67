# nls/gn.py

import math
import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

import config
from discretization.assembly import AssembledOperators, assemble_laplacian
from discretization.grid import Grid, build_grid
from discretization.quadrature import exact_power, exact_power_gradient
from models.errors import ParameterError, SolverFailure
from models.metric_graph import MetricGraph
from models.reports import GNEstimate
from nls.flow import SobolevDescent

logger = logging.getLogger(__name__)

VARIANTS = ("whole-graph", "core-restricted", "sup-norm")


class GNQuotient:
    """
    Q(u) = ‖u‖_p^p / (‖u'‖^{(p-2)/2} ‖u‖^{(p+2)/2})，零阶齐次。
    core_only 时分子只在紧核上积分（p=6 时即 C(K) 的商）。
    分子对 P1 插值精确积分，因此嵌套加密下 Q 的上确界单调不减。
    """

    def __init__(self, grid: Grid, ops: AssembledOperators, p: float, core_only: bool):
        self.grid = grid
        self.ops = ops
        self.p = p
        self.core_only = core_only
        self.a = (p - 2) / 4.0
        self.b = (p + 2) / 4.0

    def parts(self, u: np.ndarray) -> Tuple[float, float, float]:
        numerator = exact_power(self.grid, u, self.p, self.core_only)
        return numerator, float(u @ (self.ops.stiffness @ u)), float(u @ (self.ops.mass @ u))

    def value(self, u: np.ndarray) -> float:
        numerator, kin, mq = self.parts(u)
        return numerator / (kin ** self.a * mq ** self.b)

    def objective(self, u: np.ndarray) -> float:
        """-log Q，在质量球面上最小化。"""
        numerator, kin, mq = self.parts(u)
        if numerator <= 0:
            return math.inf
        return -math.log(numerator) + self.a * math.log(kin) + self.b * math.log(mq)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        numerator, kin, mq = self.parts(u)
        return (-exact_power_gradient(self.grid, u, self.p, self.core_only) / numerator
                + 2 * self.a * (self.ops.stiffness @ u) / kin
                + 2 * self.b * (self.ops.mass @ u) / mq)


def vertex_bump(grid: Grid, vertex: str, width: float = 1.0) -> np.ndarray:
    """以顶点为中心、沿所有相邻边衰减的 Gauss 凸包。"""
    graph = grid.graph

    def profile(e, x):
        if e.halfline:
            near = graph.half_lines[[h.name for h in graph.half_lines].index(e.name)].vertex == vertex
            return np.exp(-(x / width) ** 2) if near else np.zeros_like(x)
        edge = graph.edge(e.name)
        values = np.zeros_like(x)
        if edge.v1 == vertex:
            values = np.maximum(values, np.exp(-(x / width) ** 2))
        if edge.v2 == vertex:
            values = np.maximum(values, np.exp(-((e.length - x) / width) ** 2))
        return values

    return grid.interpolate(profile)


def midpoint_bump(grid: Grid, width: float = 1.0) -> np.ndarray:
    """最长有界边中点处的 Gauss 凸包。"""
    longest = max(grid.graph.bounded_edges, key=lambda e: (e.length, e.name))
    center = 0.5 * longest.length
    return grid.interpolate(
        lambda e, x: np.exp(-((x - center) / width) ** 2) if e.name == longest.name else np.zeros_like(x))


def competitor_profile(grid: Grid) -> np.ndarray:
    return grid.interpolate(lambda e, x: np.exp(-x) if e.halfline else np.ones_like(x))


def multistart_seeds(grid: Grid) -> List[Tuple[str, np.ndarray]]:
    """确定性的多起点：每个顶点一个凸包，再加最长边中点凸包和竞争函数。"""
    seeds = [(f"vertex:{v}", vertex_bump(grid, v)) for v in grid.graph.vertices]
    seeds.append(("midpoint", midpoint_bump(grid)))
    seeds.append(("competitor", competitor_profile(grid)))
    return seeds


def _ascend(quotient: GNQuotient, seed: np.ndarray, max_iter: int, tol: float, label: str):
    flow = SobolevDescent(quotient.ops, 1.0, quotient.objective, quotient.gradient,
                          tol=tol, max_iter=max_iter, label=label)
    result = flow.run(seed)
    if not result.converged:
        logger.warning(f"{label}: 上升未收敛 (判据 {result.measure:.3e})，结果仍是有效下界")
    return result.state


def _quotient_constant(g: MetricGraph, p: float, core_only: bool, grid: Grid, levels: int,
                       max_iter: int, tol: float, variant: str) -> GNEstimate:
    ops = assemble_laplacian(grid, 0.0)
    quotient = GNQuotient(grid, ops, p, core_only)

    best_value, best_state, best_label = -math.inf, None, None
    for label, seed in multistart_seeds(grid):
        if quotient.parts(seed)[0] <= 0:
            continue
        state = _ascend(quotient, seed, max_iter, tol, f"GN[{variant}, {label}]")
        value = quotient.value(state)
        logger.debug(f"GN 起点 {label}: Q = {value:.10g}")
        if value > best_value:
            best_value, best_state, best_label = value, state, label
    if best_state is None:
        raise SolverFailure(f"没有可用的 GN 起点 (variant={variant})")

    history = [(grid.h, best_value)]
    for _ in range(1, levels):
        seed = grid.prolong(best_state)
        grid = grid.refined()
        ops = assemble_laplacian(grid, 0.0)
        quotient = GNQuotient(grid, ops, p, core_only)
        state = _ascend(quotient, seed, max_iter, tol, f"GN[{variant}, h={grid.h:g}]")
        value = quotient.value(state)
        if value < best_value:
            # 加密前的场在新空间中仍可行
            state, value = seed, quotient.value(seed)
        best_state, best_value = state, value
        history.append((grid.h, best_value))

    best_state = best_state / math.sqrt(float(best_state @ (ops.mass @ best_state)))
    if np.sum(best_state) < 0:
        best_state = -best_state
    logger.info(f"GN 常数 ({variant}, p={p}): {best_value:.10g}，最佳起点 {best_label}")
    return GNEstimate(variant=variant, p=p, value=best_value, maximizer=best_state, history=history)


def _green_diagonal(ops: AssembledOperators, t: float, nodes: np.ndarray) -> np.ndarray:
    """(S + t²M)⁻¹ 在给定节点上的对角元。"""
    lu = spla.splu((ops.stiffness + t * t * ops.mass).tocsc())
    rhs = np.zeros((ops.grid.n_dofs, nodes.size))
    rhs[nodes, np.arange(nodes.size)] = 1.0
    columns = lu.solve(rhs)
    return columns[nodes, np.arange(nodes.size)]


def _sup_norm_level(ops: AssembledOperators, nodes: np.ndarray):
    """在候选节点上最大化 2t·(S+t²M)⁻¹ₓₓ，返回 (节点, t)。"""
    scan = np.logspace(-2, 2, 25)
    table = np.array([2 * t * _green_diagonal(ops, t, nodes) for t in scan])
    i, j = np.unravel_index(np.argmax(table), table.shape)
    node = int(nodes[j])
    single = np.array([node])
    low, high = math.log(scan[max(i - 1, 0)]), math.log(scan[min(i + 1, scan.size - 1)])
    result = minimize_scalar(lambda s: -2 * math.exp(s) * _green_diagonal(ops, math.exp(s), single)[0],
                             bounds=(low, high), method='bounded', options={'xatol': 1e-8})
    t = math.exp(result.x) if -result.fun >= table[i, j] else scan[i]
    return node, t


def _sup_norm_quotient(ops: AssembledOperators, u: np.ndarray) -> float:
    """‖u‖∞ / sqrt(‖u'‖‖u‖)，P1 函数的上确界在节点处取到。"""
    kin = float(u @ (ops.stiffness @ u))
    mq = float(u @ (ops.mass @ u))
    return float(np.max(np.abs(u))) / (kin * mq) ** 0.25


def _sup_norm_constant(grid: Grid, levels: int) -> GNEstimate:
    """
    ‖u‖∞² ≤ C² ‖u'‖‖u‖ 的最优常数。对固定点 x₀，
    sup u(x₀)²/(‖u'‖‖u‖) = max_t 2t·(S+t²M)⁻¹_{x₀x₀}，极大元为 Green 函数 (S+t²M)⁻¹e_{x₀}。
    """
    ops = assemble_laplacian(grid, 0.0)
    n_vertices = len(grid.graph.vertices)
    stride = max(1, grid.n_dofs // config.SUP_NORM_CANDIDATES)
    nodes = np.unique(np.concatenate([np.arange(n_vertices), np.arange(0, grid.n_dofs, stride)]))
    node, t = _sup_norm_level(ops, nodes)

    history: List[Tuple[float, float]] = []
    state, coarse = None, None
    for level in range(levels):
        if level > 0:
            # 粗网格极大点在加密网格上仍是节点
            unit = np.zeros(grid.n_dofs)
            unit[node] = 1.0
            node = int(np.argmax(grid.prolong(unit)))
            coarse, grid = grid, grid.refined()
            ops = assemble_laplacian(grid, 0.0)
            node, t = _sup_norm_level(ops, np.unique(np.concatenate([np.arange(n_vertices), [node]])))
        rhs = np.zeros(grid.n_dofs)
        rhs[node] = 1.0
        candidate = spla.spsolve((ops.stiffness + t * t * ops.mass).tocsc(), rhs)
        value = _sup_norm_quotient(ops, candidate)
        if history and value < history[-1][1]:
            candidate = coarse.prolong(state)
            value = _sup_norm_quotient(ops, candidate)
        state = candidate
        history.append((grid.h, value))

    state = state / math.sqrt(float(state @ (ops.mass @ state)))
    if np.sum(state) < 0:
        state = -state
    logger.info(f"GN 常数 (sup-norm): {history[-1][1]:.10g}")
    return GNEstimate(variant="sup-norm", p=math.inf, value=history[-1][1], maximizer=state, history=history)


def gn_constant(g: MetricGraph, p: float, variant: str = "whole-graph", h: float = config.H_STEP,
                trunc: float = config.TRUNCATION_LENGTH, levels: Optional[int] = None,
                max_iter: int = config.GN_MAX_ITER, tol: float = config.GN_TOL) -> GNEstimate:
    """
    Gagliardo-Nirenberg 最优常数的下界估计。
    Args:
        g: 度量图。
        p: 指数，whole-graph / core-restricted 变体要求 p ∈ (2, 6]；sup-norm 忽略 p。
        variant: 'whole-graph' 即 C(G,p)，'core-restricted' 即 C(K)（p=6），'sup-norm' 即 C(G,∞)。
        levels: 嵌套加密层数（含初始网格）。
    Returns:
        GNEstimate：value 等于在 maximizer 处计算的商，history 单调不减。
    """
    if variant not in VARIANTS:
        raise ParameterError(f"未知的 GN 变体 {variant}，可选 {', '.join(VARIANTS)}")
    levels = config.GN_LEVELS if levels is None else int(levels)
    if levels < 1:
        raise ParameterError(f"加密层数 {levels} 必须至少为 1")
    grid = build_grid(g, h, trunc)
    if variant == "sup-norm":
        return _sup_norm_constant(grid, levels)
    if not (2 < p <= 6):
        raise ParameterError(f"指数 p={p} 必须位于 (2, 6]")
    return _quotient_constant(g, p, variant == "core-restricted", grid, levels, max_iter, tol, variant)


def quotient_at(estimate: GNEstimate, g: MetricGraph, h: float, trunc: float) -> float:
    """在 estimate 的极大元（最细一层网格）上重新计算商，用于核对下界。"""
    grid = build_grid(g, h, trunc)
    while grid.n_dofs != estimate.maximizer.size:
        grid = grid.refined()
    ops = assemble_laplacian(grid, 0.0)
    if estimate.variant == "sup-norm":
        return _sup_norm_quotient(ops, estimate.maximizer)
    return GNQuotient(grid, ops, estimate.p, estimate.variant == "core-restricted").value(estimate.maximizer)
