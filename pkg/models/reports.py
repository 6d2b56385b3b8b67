# models/reports.py

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


def _plain(value: Any) -> Any:
    """把 numpy 标量/数组转换为可 JSON 序列化的 Python 对象。"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class CycleCovering:
    """圈覆盖判定结果：covered 为真时 tags 给出每条边所在圈的类型，否则 bridge 指出阻断的桥。"""
    covered: bool
    bridge: Optional[str]
    tags: Dict[str, str] = field(default_factory=dict)

    def __iter__(self):
        # 允许 covered, witness = admits_cycle_covering(g)
        yield self.covered
        yield self.tags if self.covered else self.bridge


@dataclass(frozen=True)
class TopologyReport:
    n_halflines: int
    core_length: float
    has_terminal_edge: bool
    admits_cycle_covering: bool
    is_tree: bool
    n_pendants: int
    cut_edges: Tuple[str, ...]
    covering_witness: Optional[str] = None # 不满足圈覆盖时的桥

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['cut_edges'] = list(self.cut_edges)
        return data


@dataclass
class SolverReport:
    """NLSE 基态/束缚态求解结果。"""
    state: np.ndarray
    energy: float
    lagrange: float
    residual: float
    iterations: int
    converged: bool
    mass: float
    history: List[float] = field(default_factory=list) # 每步接受后的能量

    @property
    def energy_negative(self) -> bool:
        return self.energy < 0

    @property
    def multiplier_negative(self) -> bool:
        return self.lagrange < 0

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            'energy': self.energy,
            'lagrange': self.lagrange,
            'residual': self.residual,
            'iterations': self.iterations,
            'converged': self.converged,
            'mass': self.mass,
            'energy_negative': self.energy_negative,
            'multiplier_negative': self.multiplier_negative,
        })


@dataclass
class GNEstimate:
    """
    Gagliardo-Nirenberg 最优常数的下界估计。
    history 为 (h, value) 列表，嵌套加密下单调不减。
    """
    variant: str
    p: float
    value: float
    maximizer: np.ndarray
    history: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def critical_mass(self) -> Optional[float]:
        """p=6 时的临界质量 sqrt(3/C)；其他指数返回 None。"""
        if self.p != 6 or self.variant == 'sup-norm':
            return None
        return float(np.sqrt(3.0 / self.value))

    @property
    def monotone(self) -> bool:
        values = [v for _, v in self.history]
        return all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            'variant': self.variant,
            'p': 'inf' if np.isinf(self.p) else self.p,
            'value': self.value,
            'critical_mass': self.critical_mass,
            'history': [list(item) for item in self.history],
            'monotone': self.monotone,
        })


@dataclass
class Spinor:
    """
    二分量旋量 ψ = (φ, χ)：φ 在节点上（顶点自由度共享），χ 在单元中点上。
    """
    phi: np.ndarray
    chi: np.ndarray
    m: float
    c: float

    def __mul__(self, factor: complex) -> "Spinor":
        return Spinor(self.phi * factor, self.chi * factor, self.m, self.c)

    __rmul__ = __mul__

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.phi, self.chi])


@dataclass
class NldeReport:
    spinor: Spinor
    omega: float
    action: float
    residual: float
    iterations: int
    converged: bool

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            'omega': self.omega,
            'm': self.spinor.m,
            'c': self.spinor.c,
            'action': self.action,
            'residual': self.residual,
            'iterations': self.iterations,
            'converged': self.converged,
        })


@dataclass(frozen=True)
class LimitRow:
    """非相对论极限表的一行。"""
    c: float
    omega: float
    chi_l2: float
    phi_minus_u_h1: float
    nlse_residual: float

    def to_dict(self) -> Dict[str, float]:
        return _plain(asdict(self))


class Verdict(str, Enum):
    EXISTS = "ExistsByThm"
    NOT_EXISTS = "NotExistsByThm"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Classification:
    """次临界判定：verdict 加上判定中用到的全部数值。"""
    verdict: Verdict
    certificate: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return _plain({'verdict': self.verdict.value, 'certificate': self.certificate})


@dataclass
class CriticalReport:
    """临界情形 p=6 的分类：case 为 'i'..'iv'，window 为预测的基态质量区间（无基态时为 None）。"""
    case: str
    window: Optional[Tuple[float, float]]
    mu_k: Optional[float]
    note: str
    constants: Dict[str, float] = field(default_factory=dict)
    bounds_hold: Optional[bool] = None

    @property
    def has_ground_states(self) -> bool:
        return self.window is not None

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            'case': self.case,
            'window': list(self.window) if self.window else None,
            'mu_K': self.mu_k,
            'note': self.note,
            'constants': self.constants,
            'bounds_hold': self.bounds_hold,
        })


@dataclass
class NonexistenceFlags:
    """no_nonpositive_lambda: 不存在 λ ≤ 0 的束缚态；no_nonnegative_lambda: 不存在 λ ≥ 0 的束缚态。"""
    no_nonpositive_lambda: bool
    no_nonnegative_lambda: bool
    certificate: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return _plain({
            'no_nonpositive_lambda': self.no_nonpositive_lambda,
            'no_nonnegative_lambda': self.no_nonnegative_lambda,
            'certificate': self.certificate,
        })
