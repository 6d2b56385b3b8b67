# nls/variational.py

import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

import config
from discretization.assembly import AssembledOperators, assemble_laplacian
from discretization.grid import Grid, build_grid
from discretization.quadrature import simpson_power, simpson_power_gradient, simpson_power_jacobian
from models.errors import GridError, ParameterError, RegimeRefused, SolverFailure
from models.metric_graph import MetricGraph
from models.reports import SolverReport
from nls.flow import SobolevDescent

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class NlsProblem:
    """
    紧核上局部化非线性的 NLSE：-Δu - coef·χ_K|u|^{p-2}u = λu，质量约束 ‖u‖² = μ。
    coef 缺省为 1；非相对论极限的目标方程取 coef = 2m。
    """
    graph: MetricGraph
    grid: Grid
    ops: AssembledOperators
    p: float
    mu: float
    coef: float = 1.0

    def __post_init__(self):
        if not (2 < self.p <= 6):
            raise ParameterError(f"指数 p={self.p} 必须位于 (2, 6]")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ParameterError(f"质量 μ={self.mu} 必须为正")
        if not self.coef > 0:
            raise ParameterError(f"非线性系数 {self.coef} 必须为正")

    @classmethod
    def create(cls, graph: MetricGraph, p: float, mu: float, h: float = config.H_STEP,
               trunc: float = config.TRUNCATION_LENGTH, alpha: float = config.DEFAULT_ALPHA,
               coef: float = 1.0) -> "NlsProblem":
        grid = build_grid(graph, h, trunc)
        return cls(graph, grid, assemble_laplacian(grid, alpha), p, mu, coef)

    def with_mass(self, mu: float) -> "NlsProblem":
        return NlsProblem(self.graph, self.grid, self.ops, self.p, mu, self.coef)

    def check(self, u: np.ndarray):
        if u.shape != (self.grid.n_dofs,):
            raise GridError(f"场的长度 {u.shape} 与网格自由度 {self.grid.n_dofs} 不一致", kind="grid mismatch")


def mass(u: np.ndarray, prob: NlsProblem) -> float:
    """‖u‖²_{2,G}（P1 一致质量矩阵）。"""
    prob.check(u)
    return float(np.real(np.vdot(u, prob.ops.mass @ u)))


def kinetic(u: np.ndarray, prob: NlsProblem) -> float:
    """∫|u'|²，δ 条件下另加 α Σ|u(v)|²。"""
    return float(np.real(np.vdot(u, prob.ops.stiffness @ u)))


def energy(u: np.ndarray, prob: NlsProblem) -> float:
    """E(u) = ½∫|u'|² - (coef/p)∫_K|u|^p，核上积分用逐单元 Simpson。"""
    prob.check(u)
    return 0.5 * kinetic(u, prob) - prob.coef / prob.p * simpson_power(prob.grid, u, prob.p)


def energy_gradient(u: np.ndarray, prob: NlsProblem) -> np.ndarray:
    return prob.ops.stiffness @ u - prob.coef * simpson_power_gradient(prob.grid, u, prob.p)


def lagrange_multiplier(u: np.ndarray, prob: NlsProblem) -> float:
    """λ(u) = (∫|u'|² - coef∫_K|u|^p) / ‖u‖²。"""
    current = mass(u, prob)
    if current <= 0:
        raise ParameterError("零质量场没有 Lagrange 乘子", kind="zero mass")
    return (kinetic(u, prob) - prob.coef * simpson_power(prob.grid, u, prob.p)) / current


def residual(u: np.ndarray, lam: float, prob: NlsProblem) -> float:
    """
    方程 -Δu - coef·χ_K|u|^{p-2}u = λu 的离散 L² 残差。
    顶点行同时编码了连续性与 Kirchhoff/δ 条件。
    """
    prob.check(u)
    r = energy_gradient(u, prob) - lam * (prob.ops.mass @ u)
    return prob.ops.dual_norm(r)


def competitor_seed(prob: NlsProblem, decay: float = 1.0) -> np.ndarray:
    """紧核上为常数 1、半直线上为 e^{-κx} 的初值（未归一化）。"""
    return prob.grid.interpolate(lambda e, x: np.exp(-decay * x) if e.halfline else np.ones_like(x))


def bump_seed(prob: NlsProblem, width: float = 1.0) -> np.ndarray:
    """最长有界边中点处的 sech 型凸包，用于长紧核上的单峰解。"""
    longest = max(prob.graph.bounded_edges, key=lambda e: (e.length, e.name)).name
    center = 0.5 * prob.graph.edge(longest).length
    return prob.grid.interpolate(
        lambda e, x: 1.0 / np.cosh((x - center) / width) if e.name == longest else np.zeros_like(x))


def _report(u: np.ndarray, prob: NlsProblem, iterations: int, history, tol: float) -> SolverReport:
    lam = lagrange_multiplier(u, prob)
    res = residual(u, lam, prob)
    return SolverReport(state=u, energy=energy(u, prob), lagrange=lam, residual=res,
                        iterations=iterations, converged=res < tol, mass=mass(u, prob), history=list(history))


def constrained_newton(u: np.ndarray, prob: NlsProblem, tol: float,
                       max_iter: int = config.NEWTON_MAX_ITER) -> np.ndarray:
    """
    质量约束下的 Newton 法，未知量为 (u, λ)：
    [[S - coef·J(u) - λM, -Mu], [-(Mu)ᵀ, 0]] (δu, δλ) = -(F, ½(μ - uᵀMu))。
    只在残差下降时接受迭代。
    """
    S, M = prob.ops.stiffness, prob.ops.mass
    best, best_res = u, residual(u, lagrange_multiplier(u, prob), prob)
    lam = lagrange_multiplier(u, prob)
    for iteration in range(max_iter):
        Mu = M @ u
        F = energy_gradient(u, prob) - lam * Mu
        jac = S - prob.coef * simpson_power_jacobian(prob.grid, u, prob.p) - lam * M
        column = sps.csr_matrix(-Mu[:, None])
        system = sps.bmat([[jac, column], [column.T, None]], format="csc")
        rhs = np.concatenate([-F, [0.5 * (float(u @ Mu) - prob.mu)]])
        try:
            delta = spla.spsolve(system, rhs)
        except RuntimeError as e:
            logger.debug(f"Newton 线性系统奇异: {e}")
            break
        if not np.all(np.isfinite(delta)):
            break
        u = u + delta[:-1]
        u = np.sqrt(prob.mu / mass(u, prob)) * u
        lam = lagrange_multiplier(u, prob)
        res = residual(u, lam, prob)
        logger.debug(f"约束 Newton 第 {iteration + 1} 步: 残差 {res:.3e}")
        if res >= best_res:
            break
        best, best_res = u, res
        if res < 0.1 * tol:
            break
    return best


def ground_state(prob: NlsProblem, u0: Optional[np.ndarray] = None, seed: str = "competitor",
                 tol: float = config.SOLVER_TOL, max_iter: int = config.MAX_ITER,
                 mu_k: Optional[float] = None) -> SolverReport:
    """
    质量为 μ 的基态：H¹ 预条件投影梯度流，残差足够小后用约束 Newton 抛光。
    Args:
        prob: 问题。
        u0: 初值；缺省时按 seed 构造（'competitor' 或 'bump'）。
        tol: 残差阈值。
        max_iter: 梯度流最大步数。
        mu_k: 临界情形 p=6 时预先算好的 μ_K，缺省时现场估计。
    Returns:
        SolverReport，状态为非负实函数。
    """
    if not prob.p < 6:
        from nls.gn import gn_constant # 避免循环导入
        if mu_k is None:
            mu_k = gn_constant(prob.graph, 6, "core-restricted", h=prob.grid.h, trunc=prob.grid.trunc).critical_mass
        if prob.mu >= mu_k * (1 + config.CRITICAL_MARGIN):
            raise RegimeRefused(f"p=6 时质量 μ={prob.mu:.6g} 不小于 μ_K={mu_k:.6g} 的 {1 + config.CRITICAL_MARGIN} 倍")

    if u0 is None:
        u0 = bump_seed(prob) if seed == "bump" else competitor_seed(prob)
    prob.check(u0)
    logger.info(f"求基态: p={prob.p}, μ={prob.mu}, {prob.grid}")

    flow = SobolevDescent(prob.ops, prob.mu,
                          objective=lambda u: energy(u, prob),
                          gradient=lambda u: energy_gradient(u, prob),
                          tol=tol, max_iter=max_iter, label="基态梯度流")
    # 先把残差降到 Newton 的吸引域内
    polish_at = max(tol, min(1e-4, math.sqrt(tol)))
    result = flow.run(u0, measure=lambda u: residual(u, lagrange_multiplier(u, prob), prob), stop_at=polish_at)
    u = result.state
    if result.measure >= tol:
        polished = constrained_newton(u, prob, tol)
        if energy(polished, prob) <= energy(u, prob) + 1e-10 * max(1.0, abs(energy(u, prob))):
            u = polished
        else:
            logger.debug("Newton 抛光提高了能量，放弃")
    used = result.iterations
    history = list(result.history)
    if residual(u, lagrange_multiplier(u, prob), prob) >= tol and used < max_iter:
        # 第二段只用剩余的迭代预算
        second = flow.run(u, measure=lambda v: residual(v, lagrange_multiplier(v, prob), prob),
                          max_iter=max_iter - used)
        used += second.iterations
        history.extend(second.history[1:])
        u = second.state if second.measure < residual(u, lagrange_multiplier(u, prob), prob) else u

    if np.sum(prob.ops.mass @ u) < 0:
        u = -u
    report = _report(u, prob, used, history, tol)
    if not report.converged:
        raise SolverFailure(f"{max_iter} 步内未收敛, 残差 {report.residual:.3e}", partial=report)
    if not prob.p < 6:
        check_critical_energy(report, tol)
    logger.info(f"基态收敛: E={report.energy:.10g}, λ={report.lagrange:.10g}, 残差 {report.residual:.2e}")
    return report


def check_critical_energy(report: SolverReport, tol: float = config.SOLVER_TOL):
    """
    p=6 时质量低于 μ_K 的下确界为 0 且不可达，能量非负的临界点不是基态。
    Raises:
        SolverFailure: kind 为 inconclusive，partial 为该临界点。
    """
    if report.energy >= -tol:
        logger.warning(f"p=6 收敛到能量 E={report.energy:.3e} ≥ 0 的临界点，不判定为基态")
        raise SolverFailure(f"p=6 的驻点能量 E={report.energy:.6g} 非负，不是基态 (inconclusive)",
                            kind="inconclusive", partial=report)


def fixed_multiplier_newton(u: np.ndarray, lam: float, prob: NlsProblem, tol: float,
                            max_iter: int = config.NEWTON_MAX_ITER) -> np.ndarray:
    """固定 λ 的阻尼 Newton：解 Su - coef·g(u) - λMu = 0。"""
    S, M = prob.ops.stiffness, prob.ops.mass
    res = residual(u, lam, prob)
    for iteration in range(max_iter):
        if res < tol:
            break
        F = energy_gradient(u, prob) - lam * (M @ u)
        jac = (S - prob.coef * simpson_power_jacobian(prob.grid, u, prob.p) - lam * M).tocsc()
        delta = spla.spsolve(jac, -F)
        step = 1.0
        while step >= config.NEWTON_MIN_STEP:
            candidate = u + step * delta
            candidate_res = residual(candidate, lam, prob)
            if candidate_res <= (1 - config.ARMIJO_C * step) * res:
                break
            step *= 0.5
        else:
            raise SolverFailure(f"固定乘子 Newton 在残差 {res:.3e} 处停滞", kind="newton stagnation")
        u, res = candidate, candidate_res
        logger.debug(f"固定乘子 Newton 第 {iteration + 1} 步: 残差 {res:.3e}")
    return u


def bound_state_at_multiplier(prob: NlsProblem, lam: float, tol: float = config.SOLVER_TOL,
                              max_iter: int = config.MAX_ITER, max_search: int = 30) -> SolverReport:
    """
    给定乘子 λ < 0 的束缚态：在 log μ 上做割线搜索，使基态的乘子等于 λ，
    再在固定 λ 下用 Newton 解到容差。prob.mu 作为搜索起点。
    """
    if not lam < 0:
        raise ParameterError(f"乘子 λ={lam} 必须为负")
    target = math.log(-lam)

    def solve(log_mu, seed):
        report = ground_state(prob.with_mass(math.exp(log_mu)), u0=seed, tol=max(tol, 1e-6), max_iter=max_iter)
        if report.lagrange >= 0:
            raise SolverFailure(f"μ={math.exp(log_mu):.6g} 处基态乘子非负", kind="non-convergence")
        return report, math.log(-report.lagrange) - target

    x0 = math.log(prob.mu)
    r0, f0 = solve(x0, None)
    x1 = x0 + (0.5 if f0 < 0 else -0.5)
    r1, f1 = solve(x1, r0.state * math.exp(0.5 * (x1 - x0)))
    for _ in range(max_search):
        if abs(f1) < 1e-6 or f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x2 = float(np.clip(x2, x1 - 2.0, x1 + 2.0))
        seed = r1.state * math.exp(0.5 * (x2 - x1))
        x0, f0 = x1, f1
        x1 = x2
        r1, f1 = solve(x1, seed)
    logger.info(f"割线搜索: μ={math.exp(x1):.8g} 给出 λ={r1.lagrange:.8g} (目标 {lam})")

    target_prob = prob.with_mass(math.exp(x1))
    u = fixed_multiplier_newton(r1.state, lam, target_prob, tol)
    res = residual(u, lam, target_prob)
    report = SolverReport(state=u, energy=energy(u, target_prob), lagrange=lam, residual=res,
                          iterations=r1.iterations, converged=res < tol, mass=mass(u, target_prob))
    if not report.converged:
        raise SolverFailure(f"λ={lam} 的束缚态未收敛, 残差 {res:.3e}", partial=report)
    return report
