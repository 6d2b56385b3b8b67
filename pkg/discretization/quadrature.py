# discretization/quadrature.py

# |u|^p 项的逐单元求积。
# Simpson 用于能量泛函（节点值加线性插值的中点值）；
# 8 点 Gauss-Legendre 用于 GN 商，对 p=4,6 的 P1 插值函数是精确的。

import numpy as np
import scipy.sparse as sps

from discretization.grid import Grid

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_S = 0.5 * (_GL_NODES + 1.0) # 映射到 [0, 1]
_GL_W = 0.5 * _GL_WEIGHTS


def _mask(grid: Grid, core_only: bool) -> np.ndarray:
    return grid.core if core_only else np.ones(grid.n_elements, dtype=bool)


def simpson_power(grid: Grid, u: np.ndarray, p: float, core_only: bool = True) -> float:
    """∫|u|^p，逐单元 Simpson：(h/6)(|u_a|^p + 4|u_m|^p + |u_b|^p)。"""
    mask = _mask(grid, core_only)
    ua, ub = grid.element_values(u)
    ua, ub, h = ua[mask], ub[mask], grid.steps[mask]
    um = 0.5 * (ua + ub)
    return float(np.sum(h / 6.0 * (np.abs(ua) ** p + 4.0 * np.abs(um) ** p + np.abs(ub) ** p)))


def simpson_power_gradient(grid: Grid, u: np.ndarray, p: float, core_only: bool = True) -> np.ndarray:
    """(1/p)·∇ simpson_power，即离散的 χ_K |u|^{p-2} u 载荷向量。"""
    mask = _mask(grid, core_only)
    ua, ub = grid.element_values(u)
    ua, ub, h = ua[mask], ub[mask], grid.steps[mask]
    um = 0.5 * (ua + ub)
    nm = np.abs(um) ** (p - 2) * um
    wa = h / 6.0 * (np.abs(ua) ** (p - 2) * ua + 2.0 * nm)
    wb = h / 6.0 * (np.abs(ub) ** (p - 2) * ub + 2.0 * nm)
    return grid.accumulate(grid.left[mask], wa) + grid.accumulate(grid.right[mask], wb)


def simpson_power_jacobian(grid: Grid, u: np.ndarray, p: float, core_only: bool = True) -> sps.csr_matrix:
    """simpson_power_gradient 对实值 u 的雅可比矩阵（对称）。"""
    mask = _mask(grid, core_only)
    ua, ub = grid.element_values(u)
    ua, ub, h = ua[mask], ub[mask], grid.steps[mask]
    left, right = grid.left[mask], grid.right[mask]
    um = 0.5 * (ua + ub)
    scale = h / 6.0 * (p - 1)
    am = np.abs(um) ** (p - 2)
    rows = np.concatenate([left, right, left, right])
    cols = np.concatenate([left, right, right, left])
    vals = np.concatenate([scale * (np.abs(ua) ** (p - 2) + am), scale * (np.abs(ub) ** (p - 2) + am),
                           scale * am, scale * am])
    keep = (rows < grid.n_dofs) & (cols < grid.n_dofs)
    return sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(grid.n_dofs, grid.n_dofs)).tocsr()


def exact_power(grid: Grid, u: np.ndarray, p: float, core_only: bool) -> float:
    """P1 插值函数的 ∫|u|^p（Gauss-Legendre，偶数 p ≤ 14 时精确）。"""
    mask = _mask(grid, core_only)
    ua, ub = grid.element_values(u)
    ua, ub, h = ua[mask], ub[mask], grid.steps[mask]
    values = np.outer(ua, 1.0 - _GL_S) + np.outer(ub, _GL_S)
    return float(np.sum(h * (np.abs(values) ** p @ _GL_W)))


def exact_power_gradient(grid: Grid, u: np.ndarray, p: float, core_only: bool) -> np.ndarray:
    """exact_power 对节点值的梯度（不除以 p）。"""
    mask = _mask(grid, core_only)
    ua, ub = grid.element_values(u)
    ua, ub, h = ua[mask], ub[mask], grid.steps[mask]
    values = np.outer(ua, 1.0 - _GL_S) + np.outer(ub, _GL_S)
    derivative = p * np.abs(values) ** (p - 2) * values * _GL_W
    wa = h * (derivative @ (1.0 - _GL_S))
    wb = h * (derivative @ _GL_S)
    return grid.accumulate(grid.left[mask], wa) + grid.accumulate(grid.right[mask], wb)
