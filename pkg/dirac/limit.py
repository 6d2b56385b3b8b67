# dirac/limit.py

import math
import logging
from typing import List, Optional, Sequence

import numpy as np

import config
from dirac.nlde import bound_state, lift_nls_state, spinor_norms
from discretization.assembly import assemble_dirac, assemble_laplacian
from discretization.grid import Grid, build_grid
from models.errors import ParameterError, SolverFailure
from models.metric_graph import MetricGraph
from models.reports import LimitRow, SolverReport, Spinor
from nls.variational import NlsProblem, bound_state_at_multiplier, residual

logger = logging.getLogger(__name__)


def nonrel_frequency(c: float, lam: float, m: float) -> float:
    """ω = mc² + λ/(2m)：消去 χ 后 φ 满足系数为 2m、乘子为 λ 的 NLS 方程。"""
    # 极限方程的非线性系数取 2m，对应的频率偏移是 λ/(2m) 而不是 λ/m
    return m * c * c + lam / (2.0 * m)


def rescale_factor(c_prev: float, omega_prev: float, c_next: float, omega_next: float, m: float) -> float:
    """保持提升关系 χ = -ic u'/(ω + mc²) 的 χ 缩放因子。"""
    return (c_next / c_prev) * (omega_prev + m * c_prev ** 2) / (omega_next + m * c_next ** 2)


def limit_target(grid: Grid, lam: float, m: float, p: float, tol: float = config.SOLVER_TOL,
                 max_iter: int = config.MAX_ITER) -> SolverReport:
    """极限 NLS 方程 -Δu - 2m χ_K|u|^{p-2}u = λu 的束缚态。"""
    prob = NlsProblem(grid.graph, grid, assemble_laplacian(grid), p, 1.0, 2.0 * m)
    return bound_state_at_multiplier(prob, lam, tol=tol, max_iter=max_iter)


def _validate(lam: float, m: float, p: float, schedule: Sequence[float]):
    if not lam < 0:
        raise ParameterError(f"非相对论极限要求 λ < 0, 收到 λ={lam}")
    if not m > 0:
        raise ParameterError(f"质量参数 m={m} 必须为正")
    if not 2 < p < 6:
        raise ParameterError(f"指数 p={p} 必须位于 (2, 6)")
    if len(schedule) == 0:
        raise ParameterError("光速序列为空")
    if any(c <= 0 for c in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ParameterError(f"光速序列必须为正且严格递增: {list(schedule)}")


def nonrel_limit(g: MetricGraph, lam: float, m: float, p: float, schedule: Sequence[float],
                 h: float = config.H_STEP, trunc: float = config.TRUNCATION_LENGTH,
                 tol: float = config.SOLVER_TOL, max_iter: int = config.MAX_ITER,
                 target: Optional[SolverReport] = None) -> List[LimitRow]:
    """
    沿 c₁ < c₂ < … 做延拓：c₁ 从极限 NLS 解的提升出发，之后每一级用上一级的解
    （χ 按 rescale_factor 缩放）热启动。
    Returns:
        每个 c 一行：(c, ω, ‖χ‖₂, ‖φ - u‖_{H¹}, φ 的 NLS-2m 残差)。
    Raises:
        SolverFailure: 某一级失败时，partial 为已完成的行。
    """
    _validate(lam, m, p, schedule)
    grid = build_grid(g, h, trunc)
    if target is None:
        target = limit_target(grid, lam, m, p, tol, max_iter)
    u = target.state
    nls = NlsProblem(g, grid, assemble_laplacian(grid), p, target.mass, 2.0 * m)
    h1 = nls.ops.stiffness + nls.ops.mass

    rows: List[LimitRow] = []
    seed, previous = None, None
    for c in schedule:
        omega = nonrel_frequency(c, lam, m)
        ops = assemble_dirac(grid, m, c)
        if seed is None:
            seed = lift_nls_state(u, omega, ops)
        else:
            seed = Spinor(seed.phi, seed.chi * rescale_factor(previous[0], previous[1], c, omega, m), m, c)
        try:
            report = bound_state(omega, p, ops, seed=seed, tol=tol)
        except (SolverFailure, ParameterError) as e:
            raise SolverFailure(f"c={c} 的 NLDE 求解失败: {e.message}", kind=getattr(e, 'kind', None),
                                partial=rows) from e

        phi = report.spinor.phi.real
        sign = 1.0 if float(phi @ (nls.ops.mass @ u)) >= 0 else -1.0
        diff = sign * phi - u
        norms = spinor_norms(report.spinor, ops, p)
        row = LimitRow(
            c=float(c),
            omega=float(omega),
            chi_l2=float(norms['chi_l2']),
            phi_minus_u_h1=float(np.sqrt(diff @ (h1 @ diff))),
            nlse_residual=residual(sign * phi, lam, nls),
        )
        rows.append(row)
        logger.info(f"c={c}: ‖χ‖={row.chi_l2:.4e}, ‖φ-u‖_H1={row.phi_minus_u_h1:.4e}, "
                    f"NLS 残差 {row.nlse_residual:.4e}, c·‖χ‖/‖φ‖={c * row.chi_l2 / norms['phi_l2']:.4g}")
        seed = report.spinor
        previous = (c, omega)
    return rows


def observed_rate(rows: Sequence[LimitRow]) -> Optional[float]:
    """相邻两级 ‖χ‖ 的对数斜率 -d log‖χ‖ / d log c（只报告，不作断言）。"""
    if len(rows) < 2:
        return None
    a, b = rows[-2], rows[-1]
    if a.chi_l2 <= 0 or b.chi_l2 <= 0:
        return None
    return -math.log(b.chi_l2 / a.chi_l2) / math.log(b.c / a.c)
