# nls/flow.py

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

import config
from discretization.assembly import AssembledOperators
from models.errors import SolverFailure

logger = logging.getLogger(__name__)


@dataclass
class FlowResult:
    state: np.ndarray
    value: float
    iterations: int
    converged: bool
    measure: float
    history: List[float] = field(default_factory=list)


class SobolevDescent:
    """
    质量球面 {uᵀMu = mass} 上的投影梯度流。
    梯度以 H¹ 内积 (S + M) 做 Riesz 表示后投影到切空间，步长用 Barzilai-Borwein，
    Armijo 回溯保证目标函数单调下降；每步之后重新归一化质量。
    """

    def __init__(self, ops: AssembledOperators, mass: float,
                 objective: Callable[[np.ndarray], float],
                 gradient: Callable[[np.ndarray], np.ndarray],
                 tol: float = config.SOLVER_TOL, max_iter: int = config.MAX_ITER,
                 label: str = "flow"):
        self.ops = ops
        self.mass = float(mass)
        self.objective = objective
        self.gradient = gradient
        self.tol = tol
        self.max_iter = max_iter
        self.label = label
        self.preconditioner = ops.stiffness + ops.mass
        self.logger = logging.getLogger(__name__)

    def project(self, v: np.ndarray) -> np.ndarray:
        """把 v 缩放回质量球面。"""
        current = float(v @ (self.ops.mass @ v))
        if current <= 0:
            raise SolverFailure(f"{self.label}: 迭代退化为零场", kind="trivial solution")
        return np.sqrt(self.mass / current) * v

    def tangent_direction(self, u: np.ndarray, g: np.ndarray):
        """
        返回 (d, Pd)：d 为 H¹ 梯度在切空间 {vᵀMu = 0} 上的投影，Pd = g - θ·Mu。
        """
        solve = self.ops.sobolev_solver
        Mu = self.ops.mass @ u
        a = solve(g)
        b = solve(Mu)
        theta = float(Mu @ a) / float(Mu @ b)
        return a - theta * b, g - theta * Mu

    def run(self, u0: np.ndarray, measure: Optional[Callable[[np.ndarray], float]] = None,
            stop_at: Optional[float] = None, max_iter: Optional[int] = None) -> FlowResult:
        """
        从 u0 出发下降直至 measure(u) < stop_at（默认 tol），或达到 max_iter（默认构造时的值）。
        measure 缺省为切向梯度的 H⁻¹ 范数。
        Args:
            u0: 初始场，会先被投影到质量球面。
            measure: 收敛判据。
            stop_at: 收敛阈值。
            max_iter: 本次运行的步数上限，用于接续之前已消耗的迭代预算。
        Returns:
            FlowResult
        """
        threshold = self.tol if stop_at is None else stop_at
        limit = self.max_iter if max_iter is None else max(0, int(max_iter))
        u = self.project(np.asarray(u0, dtype=float))
        value = self.objective(u)
        history = [value]
        step = 1.0
        previous = None # (u, Pd)

        for iteration in range(1, limit + 1):
            g = self.gradient(u)
            d, Pd = self.tangent_direction(u, g)
            slope = float(Pd @ d)
            current = measure(u) if measure is not None else np.sqrt(max(slope, 0.0))
            if current < threshold:
                self.logger.debug(f"{self.label}: 第 {iteration - 1} 步收敛, 判据 {current:.3e}")
                return FlowResult(u, value, iteration - 1, True, current, history)

            if previous is not None:
                s = u - previous[0]
                y = Pd - previous[1]
                sy = float(s @ y)
                if sy > 0:
                    step = float(np.clip(float(s @ (self.preconditioner @ s)) / sy, 1e-4, 1e4))

            accepted = False
            trial_step = step
            for _ in range(40):
                candidate = self.project(u - trial_step * d)
                candidate_value = self.objective(candidate)
                if candidate_value <= value - config.ARMIJO_C * trial_step * slope:
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                # 步长已退化到舍入误差以下，当前点就是可达到的最优
                if abs(value) > 0 and trial_step * slope < 1e-14 * abs(value):
                    self.logger.debug(f"{self.label}: 线搜索停滞于 {current:.3e}")
                    return FlowResult(u, value, iteration - 1, False, current, history)
                raise SolverFailure(f"{self.label}: 第 {iteration} 步线搜索失败，能量不单调",
                                    kind="energy non-monotonic")

            previous = (u, Pd)
            u, value = candidate, candidate_value
            history.append(value)
            step = trial_step
            if iteration % 200 == 0:
                self.logger.debug(f"{self.label}: 第 {iteration} 步, 值 {value:.10g}, 判据 {current:.3e}")

        g = self.gradient(u)
        d, Pd = self.tangent_direction(u, g)
        current = measure(u) if measure is not None else np.sqrt(max(float(Pd @ d), 0.0))
        self.logger.warning(f"{self.label}: {limit} 步后未收敛, 判据 {current:.3e}")
        return FlowResult(u, value, limit, current < threshold, current, history)
