# nls/classify.py

import math
import logging
from typing import Dict, Optional

import config
from models.errors import ParameterError
from models.metric_graph import MetricGraph
from models.reports import Classification, CriticalReport, NonexistenceFlags, Verdict
from nls.competitor import cp_constant, critical_constants, optimal_competitor
from nls.gn import gn_constant
from topology.classifier import classify_topology

logger = logging.getLogger(__name__)

C4_CONVENTION = "c_4 = 1/2 (0^0 -> 1)"


def _check_subcritical(p: float):
    if not (4 <= p < 6):
        raise ParameterError(f"次临界判定要求 p ∈ [4, 6), 收到 p={p}")


def gn_inputs(g: MetricGraph, p: float, constants: Optional[Dict[str, float]] = None,
              h: float = config.H_STEP, trunc: float = config.TRUNCATION_LENGTH) -> Dict[str, float]:
    """
    判定所需的 GN 常数 C(G,p) 与 C(G,∞)。可以通过 constants 注入预先算好的值，
    键为 'C_p' 和 'C_inf'；缺少的项现场估计。p = 4 时 C(G,p) 的指数为 0，不需要估计。
    """
    values = dict(constants or {})
    if 'C_inf' not in values:
        values['C_inf'] = gn_constant(g, p, "sup-norm", h=h, trunc=trunc).value
    if 'C_p' not in values:
        values['C_p'] = 1.0 if p == 4 else gn_constant(g, p, "whole-graph", h=h, trunc=trunc).value
    return values


def classify_subcritical(g: MetricGraph, mu: float, p: float, constants: Optional[Dict[str, float]] = None,
                         h: float = config.H_STEP, trunc: float = config.TRUNCATION_LENGTH) -> Classification:
    """
    p ∈ [4, 6) 时基态存在/不存在的充分条件：
      μ^{(p-2)/(6-p)}|K| > N^{4/(6-p)} c_p                      ⇒ ExistsByThm
      μ^{(p-2)/(6-p)}|K| < (p/2)^{2/(6-p)} C(G,p)^{(4-p)/(6-p)} / C(G,∞)^p ⇒ NotExistsByThm
    两个严格不等式都不成立时为 Inconclusive。
    """
    _check_subcritical(p)
    if not mu > 0:
        raise ParameterError(f"质量 μ={mu} 必须为正")
    K, N = g.core_length, g.n_halflines
    lhs = mu ** ((p - 2) / (6 - p)) * K
    cp = cp_constant(p)
    existence_rhs = N ** (4.0 / (6 - p)) * cp

    values = gn_inputs(g, p, constants, h, trunc)
    nonexistence_rhs = ((p / 2.0) ** (2.0 / (6 - p)) * values['C_p'] ** ((4 - p) / (6 - p))
                        / values['C_inf'] ** p)
    decay, competitor = optimal_competitor(g, mu, p)

    exists = lhs > existence_rhs
    not_exists = lhs < nonexistence_rhs
    if exists and not_exists:
        logger.warning(f"两个条件同时成立 (lhs={lhs:.6g})，GN 估计可能不准确；以闭式存在条件为准")
    verdict = Verdict.EXISTS if exists else Verdict.NOT_EXISTS if not_exists else Verdict.INCONCLUSIVE
    certificate = {
        'p': p, 'mu': mu, 'core_length': K, 'n_halflines': N,
        'lhs': lhs, 'c_p': cp, 'existence_rhs': existence_rhs,
        'nonexistence_rhs': nonexistence_rhs, 'C_p': values['C_p'], 'C_inf': values['C_inf'],
        'competitor_decay': decay, 'competitor_energy': competitor,
        'convention': C4_CONVENTION,
    }
    logger.info(f"次临界判定 p={p}, μ={mu}: {verdict.value}")
    return Classification(verdict, certificate)


def nonexistence_check(g: MetricGraph, mu: float, p: float, constants: Optional[Dict[str, float]] = None,
                       h: float = config.H_STEP, trunc: float = config.TRUNCATION_LENGTH) -> NonexistenceFlags:
    """
    束缚态的不存在性：
      (i)  μ^{(p-2)/(6-p)}|K| < C(G,p)^{(4-p)/(6-p)} / C(G,∞)^p ⇒ 没有 λ ≤ 0 的束缚态；
      (ii) 紧核是树且悬挂边不超过一条 ⇒ 没有 λ ≥ 0 的束缚态。
    """
    _check_subcritical(p)
    topology = classify_topology(g)
    values = gn_inputs(g, p, constants, h, trunc)
    lhs = mu ** ((p - 2) / (6 - p)) * g.core_length
    rhs = values['C_p'] ** ((4 - p) / (6 - p)) / values['C_inf'] ** p
    flags = NonexistenceFlags(
        no_nonpositive_lambda=lhs < rhs,
        no_nonnegative_lambda=topology.is_tree and topology.n_pendants <= 1,
        certificate={'p': p, 'mu': mu, 'lhs': lhs, 'rhs': rhs, 'C_p': values['C_p'], 'C_inf': values['C_inf'],
                     'is_tree': topology.is_tree, 'n_pendants': topology.n_pendants},
    )
    logger.info(f"不存在性检查: (i)={flags.no_nonpositive_lambda}, (ii)={flags.no_nonnegative_lambda}")
    return flags


def classify_critical(g: MetricGraph, mu_k: Optional[float] = None, h: float = config.H_STEP,
                      trunc: float = config.TRUNCATION_LENGTH) -> CriticalReport:
    """
    p = 6 的分类，按以下优先级：
      (i)   有终端边                  → 任何质量都没有基态
      (ii)  存在圈覆盖                → 任何质量都没有基态
      (iii) 恰有一条半直线            → 基态质量在 [μ_K, μ_R] 中，且 μ_R+ < μ_K < √3
      (iv)  其余情形                  → 基态质量在 [μ_K, μ_R] 中（要求 μ_K ≠ μ_R）
    """
    topology = classify_topology(g)
    constants = critical_constants()
    mu_r = constants['mu_R']

    if topology.has_terminal_edge:
        return CriticalReport('i', None, None, "no ground state for any mu (terminal edge)", constants)
    if topology.admits_cycle_covering:
        return CriticalReport('ii', None, None, "no ground state for any mu (cycle covering)", constants)

    if mu_k is None:
        mu_k = gn_constant(g, 6, "core-restricted", h=h, trunc=trunc).critical_mass
    if topology.n_halflines == 1:
        bounds = constants['mu_R_plus'] < mu_k < constants['sqrt3']
        report = CriticalReport('iii', (mu_k, mu_r), mu_k, "ground states for mu in [mu_K, mu_R]", constants, bounds)
        if not bounds:
            logger.warning(f"μ_K={mu_k:.6g} 不在 (μ_R+, √3) 内，检查网格分辨率")
        return report

    if math.isclose(mu_k, mu_r, rel_tol=1e-3):
        note = "mu_K numerically equal to mu_R; window degenerate"
    else:
        note = "ground states for mu in [mu_K, mu_R]"
    return CriticalReport('iv', (mu_k, mu_r), mu_k, note, constants, mu_k <= mu_r * (1 + 1e-3))
