# rearrangement/rearrange.py

import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from discretization.grid import Grid
from models.errors import ParameterError

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_S = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def _element_extremes(grid: Grid, u: np.ndarray):
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_dofs,):
        raise ParameterError(f"场的长度 {u.shape} 与网格自由度 {grid.n_dofs} 不一致", kind="grid mismatch")
    if np.any(u < 0):
        raise ParameterError(f"重排要求非负函数, 最小值 {u.min():.3e}", kind="negative values")
    ua, ub = grid.element_values(u)
    return np.minimum(ua, ub), np.maximum(ua, ub), grid.steps


@dataclass
class Distribution:
    """
    分布函数 ρ(t) = |{x : u(x) > t}|，对 P1 插值逐单元精确计算。
    levels 为升序断点（节点值与 0），rho 为断点处的右极限，rho_left 为左极限；
    两者之差是恰好取该值的平台测度。相邻断点之间 ρ 线性，斜率为 slopes。
    """
    levels: np.ndarray
    rho: np.ndarray
    rho_left: np.ndarray
    slopes: np.ndarray
    total_length: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.levels, t, side='right') - 1, 0, self.levels.size - 1)
        value = self.rho[k] + self.slopes[k] * (t - self.levels[k])
        value = np.where(t < self.levels[0], self.total_length, value)
        return np.where(t >= self.levels[-1], 0.0, value)

    @property
    def maximum(self) -> float:
        return float(self.levels[-1])


def distribution(u: np.ndarray, grid: Grid) -> Distribution:
    """
    计算非负场 u 在截断图上的分布函数。
    非平坦单元在 (lo, hi) 上贡献斜率 -h/(hi-lo)；平坦单元在其取值处贡献一个跳跃。
    """
    lo, hi, h = _element_extremes(grid, u)
    levels = np.unique(np.concatenate([[0.0], lo, hi]))
    n = levels.size
    flat = hi <= lo

    slope_events = np.zeros(n + 1)
    i_lo = np.searchsorted(levels, lo[~flat])
    i_hi = np.searchsorted(levels, hi[~flat])
    w = h[~flat] / (hi[~flat] - lo[~flat])
    np.add.at(slope_events, i_lo, -w)
    np.add.at(slope_events, i_hi, w)
    slopes = np.cumsum(slope_events)[:n]

    plateau = np.bincount(np.searchsorted(levels, lo[flat]), weights=h[flat], minlength=n)

    rho = np.zeros(n)
    rho_left = np.zeros(n)
    rho_left[-1] = plateau[-1]
    for k in range(n - 2, -1, -1):
        rho[k] = rho_left[k + 1] - slopes[k] * (levels[k + 1] - levels[k])
        rho_left[k] = rho[k] + plateau[k]
    total = float(h.sum())
    return Distribution(levels, rho, rho_left, slopes, total)


@dataclass
class RearrangedProfile:
    """
    重排后的剖面，样本之间线性插值。kind='decreasing' 时 x ∈ [0, |G|]，
    kind='symmetric' 时 x ∈ [-|G|/2, |G|/2]。
    x 为步长 h 的等距点并上 u* 的全部断点，所以插值就是精确的重排。
    """
    kind: str
    x: np.ndarray
    values: np.ndarray
    total_length: float

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.x)

    def lp_norm(self, p: float) -> float:
        """样本线性插值的 L^p 范数。"""
        a, b = self.values[:-1], self.values[1:]
        points = np.outer(a, 1.0 - _GL_S) + np.outer(b, _GL_S)
        return float(np.sum(self.widths * (np.abs(points) ** p @ _GL_W))) ** (1.0 / p)

    def dirichlet_norm(self) -> float:
        """‖v'‖₂（线性插值）。"""
        return float(np.sqrt(np.sum(np.diff(self.values) ** 2 / self.widths)))

    def is_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def is_even(self) -> bool:
        return bool(np.array_equal(self.values, self.values[::-1]) and np.array_equal(self.x, -self.x[::-1]))


def _inverse_points(dist: Distribution):
    """u* 的分段线性节点 (x, t)，按 x 升序；平台对应 u* 的水平段。"""
    xs = np.empty(2 * dist.levels.size)
    ts = np.empty(2 * dist.levels.size)
    xs[0::2] = dist.rho[::-1]
    xs[1::2] = dist.rho_left[::-1]
    ts[0::2] = dist.levels[::-1]
    ts[1::2] = dist.levels[::-1]
    return np.maximum.accumulate(xs), ts


def _sample_points(total: float, step: float, breakpoints: np.ndarray) -> np.ndarray:
    n = max(2, math.ceil(total / step - 1e-9))
    x = np.unique(np.concatenate([np.linspace(0.0, total, n + 1),
                                  breakpoints[(breakpoints > 0.0) & (breakpoints < total)]]))
    # 舍入产生的近重合点会得到零宽度区间
    keep = np.concatenate([[True], np.diff(x) > 1e-12 * max(total, 1.0)])
    x = x[keep]
    x[-1] = total
    return x


def decreasing_rearrangement(u: np.ndarray, grid: Grid, step: Optional[float] = None) -> RearrangedProfile:
    """
    u*(x) = inf{t ≥ 0 : ρ(t) ≤ x}。ρ 在断点之间线性，所以 u* 是以 (ρ(t_k), t_k) 为节点的折线；
    输出在这些节点和步长约为 step（缺省 h）的等距点上取值。
    """
    dist = distribution(u, grid)
    step = grid.h if step is None else step
    xs, ts = _inverse_points(dist)
    x = _sample_points(dist.total_length, step, xs)
    values = np.interp(x, xs, ts, right=0.0)
    # 插值的舍入可能破坏单调性
    values = np.minimum.accumulate(values)
    return RearrangedProfile('decreasing', x, values, dist.total_length)


def symmetric_rearrangement(u: np.ndarray, grid: Grid, step: Optional[float] = None) -> RearrangedProfile:
    """û(x) = u*(2|x|)：u* 样本的镜像，x 坐标减半，因而精确对称。"""
    star = decreasing_rearrangement(u, grid, step)
    half = 0.5 * star.x
    x = np.concatenate([-half[:0:-1], half])
    values = np.concatenate([star.values[:0:-1], star.values])
    return RearrangedProfile('symmetric', x, values, star.total_length)


def profile_distribution(profile: RearrangedProfile, t) -> np.ndarray:
    """剖面（线性插值）的分布函数，用于检验等测性。"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a, b = profile.values[:-1], profile.values[1:]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    span = np.where(hi > lo, hi - lo, 1.0)
    fraction = np.where(hi[None, :] > lo[None, :],
                        np.clip((hi[None, :] - t[:, None]) / span[None, :], 0.0, 1.0),
                        (lo[None, :] > t[:, None]).astype(float))
    return fraction @ profile.widths


def preimage_counts(u: np.ndarray, grid: Grid, levels) -> np.ndarray:
    """
    每个水平 t 的原像个数 #{x : u(x) = t}。落在单元内部的交点与取值恰为 t 的节点各计一次；
    存在取值为 t 的平坦单元时原像无穷多，记为 inf。
    """
    lo, hi, _ = _element_extremes(grid, u)
    nodes = np.asarray(u, dtype=float)
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    crossings = ((lo[None, :] < levels[:, None]) & (levels[:, None] < hi[None, :])).sum(axis=1)
    on_nodes = (nodes[None, :] == levels[:, None]).sum(axis=1)
    if grid.graph.n_halflines:
        # 截断端（Dirichlet 节点）的值为 0
        on_nodes = on_nodes + (levels == 0.0) * grid.graph.n_halflines
    counts = (crossings + on_nodes).astype(float)
    plateau = ((hi == lo)[None, :] & (lo[None, :] == levels[:, None])).any(axis=1)
    counts[plateau] = np.inf
    return counts


def has_two_preimages(u: np.ndarray, grid: Grid, n_levels: int = 200) -> bool:
    """在 (0, max u) 内等距的 n_levels 个水平上检查原像个数是否都不少于 2。"""
    top = float(np.max(u))
    if top <= 0:
        return False
    levels = np.linspace(0.0, top, n_levels + 2)[1:-1]
    return bool(np.all(preimage_counts(u, grid, levels) >= 2))


def profile_norms(profile: RearrangedProfile, exponents=(2, 4, 6)) -> dict:
    """剖面的 L^p 范数与 Dirichlet 范数，键为 'L2'、'L4'… 和 'dirichlet'。"""
    norms = {f"L{p:g}": profile.lp_norm(p) for p in exponents}
    norms['dirichlet'] = profile.dirichlet_norm()
    return norms


def field_norms(u: np.ndarray, grid: Grid, exponents=(2, 4, 6)) -> dict:
    """图上 P1 场的同一组范数，用于和 profile_norms 对照。"""
    u = np.asarray(u, dtype=float)
    ua, ub = grid.element_values(u)
    points = np.outer(ua, 1.0 - _GL_S) + np.outer(ub, _GL_S)
    norms = {}
    for p in exponents:
        norms[f"L{p:g}"] = float(np.sum(grid.steps * (np.abs(points) ** p @ _GL_W))) ** (1.0 / p)
    norms['dirichlet'] = float(np.sqrt(np.sum((ub - ua) ** 2 / grid.steps)))
    return norms
