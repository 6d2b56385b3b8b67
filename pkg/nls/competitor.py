# nls/competitor.py

# 闭式竞争函数与定理中的常数。
# 竞争函数在紧核上取常数 A，在每条半直线上取 A·e^{-κx}，A 由质量决定。

import math
import logging
from typing import Dict, Tuple

from scipy.optimize import minimize_scalar

from models.errors import ParameterError
from models.metric_graph import MetricGraph

logger = logging.getLogger(__name__)


def competitor_energy(g: MetricGraph, mu: float, p: float, decay: float, coef: float = 1.0) -> float:
    """
    竞争函数的能量（闭式）：
    A² = μ / (|K| + N/(2κ))，E = N·A²·κ/4 - coef·A^p·|K|/p。
    """
    if not decay > 0:
        raise ParameterError(f"衰减率 κ={decay} 必须为正")
    K, N = g.core_length, g.n_halflines
    amplitude2 = mu / (K + N / (2.0 * decay))
    return N * amplitude2 * decay / 4.0 - coef * amplitude2 ** (p / 2.0) * K / p


def optimal_competitor(g: MetricGraph, mu: float, p: float, coef: float = 1.0) -> Tuple[float, float]:
    """在 log κ 上最小化竞争函数能量，返回 (κ*, E*)。E* < 0 即证明 inf E < 0。"""
    result = minimize_scalar(lambda s: competitor_energy(g, mu, p, math.exp(s), coef),
                             bounds=(-20.0, 20.0), method='bounded', options={'xatol': 1e-10})
    decay = math.exp(result.x)
    value = competitor_energy(g, mu, p, decay, coef)
    logger.debug(f"最优竞争函数: κ={decay:.6g}, E={value:.6g}")
    return decay, value


def cp_constant(p: float) -> float:
    """
    c_p = [(p(p-4)/16)^{2/(p-2)} + (p/8)(p(p-4)/16)^{(4-p)/(p-2)}]^{(p-2)/(6-p)}，p ∈ [4, 6)。
    p = 4 时第二项含 0⁰，取极限约定 0⁰ = 1，得到 c₄ = 1/2。
    """
    if not (4 <= p < 6):
        raise ParameterError(f"c_p 只对 p ∈ [4, 6) 有定义, 收到 p={p}")
    base = p * (p - 4) / 16.0
    first = base ** (2.0 / (p - 2))
    second = p / 8.0 * (1.0 if p == 4 else base ** ((4.0 - p) / (p - 2)))
    return (first + second) ** ((p - 2) / (6.0 - p))


def critical_constants() -> Dict[str, float]:
    """临界情形 p=6 的参照质量：实直线 μ_R、半直线 μ_R+ = μ_R/2，以及 √3。"""
    mu_r = math.pi * math.sqrt(3.0) / 2.0
    return {'mu_R': mu_r, 'mu_R_plus': mu_r / 2.0, 'sqrt3': math.sqrt(3.0)}


def competitor_certificate(g: MetricGraph, mu: float, p: float, coef: float = 1.0) -> Dict[str, float]:
    decay, value = optimal_competitor(g, mu, p, coef)
    return {'decay': decay, 'energy': value, 'negative': value < 0}
