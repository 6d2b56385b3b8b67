# discretization/assembly.py

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

import config
from discretization.grid import Grid
from models.errors import ParameterError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AssembledOperators:
    """
    与网格自由度顺序一致的稀疏算子。
    Laplace 部分：stiffness (∫u'v' + α Σ u(v)v(v))、mass (∫uv)、core_mass (∫_K uv)。
    Dirac 部分：dirac 为 Hermite 形式矩阵 H，dirac_mass 为对角质量 B，
    离散 Dirac 算子即 B⁻¹H；dirac_real 是经 χ → iχ 酉变换后的实对称形式。
    """
    grid: Grid
    stiffness: Optional[sps.csr_matrix] = None
    mass: Optional[sps.csr_matrix] = None
    core_mass: Optional[sps.csr_matrix] = None
    alpha: float = 0.0
    dirac: Optional[sps.csr_matrix] = None
    dirac_real: Optional[sps.csr_matrix] = None
    dirac_mass: Optional[np.ndarray] = None
    m: Optional[float] = None
    c: Optional[float] = None
    _cache: Dict = field(default_factory=dict, repr=False)

    @cached_property
    def mass_solver(self):
        """质量矩阵的分解，用于离散 L² 残差范数。"""
        return spla.factorized(self.mass.tocsc())

    @cached_property
    def sobolev_solver(self):
        """H¹ 预条件子 (S + M) 的分解。"""
        return spla.factorized((self.stiffness + self.mass).tocsc())

    def dual_norm(self, r: np.ndarray) -> float:
        """载荷向量 r 对应函数的离散 L² 范数 sqrt(rᵀ M⁻¹ r)。"""
        z = self.mass_solver(r.real) + (1j * self.mass_solver(r.imag) if np.iscomplexobj(r) else 0.0)
        return float(np.sqrt(max(np.real(np.vdot(r, z)), 0.0)))

    @property
    def n_phi(self) -> int:
        return self.grid.n_dofs

    @property
    def n_chi(self) -> int:
        return self.grid.n_elements


def _coo(grid: Grid, rows, cols, vals) -> sps.csr_matrix:
    keep = (rows < grid.n_dofs) & (cols < grid.n_dofs)
    return sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(grid.n_dofs, grid.n_dofs)).tocsr()


def _element_matrix(grid: Grid, diag, off, mask=None):
    """按单元装配 2×2 对称矩阵 [[diag, off], [off, diag]]，截断端为 Dirichlet。"""
    left, right = grid.left, grid.right
    if mask is not None:
        left, right, diag, off = left[mask], right[mask], diag[mask], off[mask]
    rows = np.concatenate([left, right, left, right])
    cols = np.concatenate([left, right, right, left])
    vals = np.concatenate([diag, diag, off, off])
    return _coo(grid, rows, cols, vals)


def assemble_laplacian(grid: Grid, alpha: float = 0.0) -> AssembledOperators:
    """
    P1 有限元刚度/质量矩阵。顶点自由度共享实现连续性，δ 型条件以弱形式
    α u(v)² 加在每个紧核顶点上（α=0 即 Kirchhoff）；人工远端取齐次 Dirichlet。
    Args:
        grid: 网格。
        alpha: δ 耦合强度 α。
    Returns:
        AssembledOperators: stiffness, mass, core_mass。
    """
    h = grid.steps
    stiffness = _element_matrix(grid, 1.0 / h, -1.0 / h)
    if alpha != 0.0:
        # 连通且紧核非空时每个顶点都在 K 中
        n_vertices = len(grid.graph.vertices)
        delta = np.zeros(grid.n_dofs)
        delta[:n_vertices] = alpha
        stiffness = stiffness + sps.diags(delta, format='csr')
    mass = _element_matrix(grid, h / 3.0, h / 6.0)
    core_mass = _element_matrix(grid, h / 3.0, h / 6.0, mask=grid.core)
    logger.debug(f"装配 Laplace 算子: {grid.n_dofs} 个自由度, α={alpha}")
    return AssembledOperators(grid=grid, stiffness=stiffness, mass=mass, core_mass=core_mass, alpha=float(alpha))


def difference_matrix(grid: Grid) -> sps.csr_matrix:
    """G：节点值 → 单元中点处的差商 (φ_b - φ_a)/h，方向沿边的参数化。"""
    n_el = grid.n_elements
    index = np.arange(n_el)
    rows = np.concatenate([index, index])
    cols = np.concatenate([grid.right, grid.left])
    vals = np.concatenate([1.0 / grid.steps, -1.0 / grid.steps])
    keep = cols < grid.n_dofs
    return sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n_el, grid.n_dofs)).tocsr()


def lumped_node_weights(grid: Grid) -> np.ndarray:
    """节点的集中质量：相邻单元长度的一半之和。"""
    half = 0.5 * grid.steps
    return grid.accumulate(grid.left, half) + grid.accumulate(grid.right, half)


def assemble_dirac(grid: Grid, m: float, c: float) -> AssembledOperators:
    """
    交错网格上的 Kirchhoff 型 Dirac 算子 -ic σ₁ d/dx + mc² σ₃。
    φ 在节点（顶点共享，即连续性条件），χ 在单元中点；χ 的导数由 -W⁻¹GᵀM_χ 给出，
    它在顶点行上恰为带符号和 Σ χ_e(v)_±（χ_e(0) 或 -χ_e(ℓ_e)），即离散通量平衡。
    交错排布避免了中心差分的费米子加倍。
    """
    if not (m > 0 and c > 0):
        raise ParameterError(f"Dirac 参数必须为正: m={m}, c={c}")
    G = difference_matrix(grid)
    W = lumped_node_weights(grid)
    Mchi = sps.diags(grid.steps, format='csr')
    Wd = sps.diags(W, format='csr')

    upper = (1j * c) * (G.T @ Mchi)
    hermitian = sps.bmat([[m * c * c * Wd, upper], [upper.conj().T, -m * c * c * Mchi]], format='csr')
    coupling = -c * (G.T @ Mchi)
    real = sps.bmat([[m * c * c * Wd, coupling], [coupling.T, -m * c * c * Mchi]], format='csr')
    weights = np.concatenate([W, grid.steps])
    logger.debug(f"装配 Dirac 算子: φ {grid.n_dofs} 个, χ {grid.n_elements} 个, m={m}, c={c}")
    return AssembledOperators(grid=grid, dirac=hermitian, dirac_real=real, dirac_mass=weights, m=float(m), c=float(c))


def laplacian_eigenvalues(ops: AssembledOperators, k: int = 5, shift: float = -0.5) -> np.ndarray:
    """刚度/质量矩阵束最靠近 shift 的 k 个特征值（升序）。"""
    values = spla.eigsh(ops.stiffness.tocsc(), k=k, M=ops.mass.tocsc(), sigma=shift,
                        which='LM', return_eigenvectors=False)
    return np.sort(values)


def certify_spectral_gap(ops: AssembledOperators, k: int = 4) -> float:
    """
    用移位求逆在 0 附近求离散自由 Dirac 算子的特征值，返回 min |ν|。
    对称化 B^{-1/2} R B^{-1/2} 与 B⁻¹H 同谱。
    """
    key = ('gap', k)
    if key in ops._cache:
        return ops._cache[key]
    scale = sps.diags(1.0 / np.sqrt(ops.dirac_mass), format='csr')
    sym = (scale @ ops.dirac_real @ scale).tocsc()
    k = min(k, sym.shape[0] - 2)
    values = spla.eigsh(sym, k=k, sigma=0.0, which='LM', return_eigenvectors=False)
    gap = float(np.min(np.abs(values)))
    ops._cache[key] = gap
    threshold = config.SPECTRAL_GAP_FACTOR * ops.m * ops.c ** 2
    if gap < threshold:
        logger.warning(f"离散 Dirac 算子在谱隙内有特征值 {gap:.6g} < {threshold:.6g}")
    else:
        logger.debug(f"谱隙验证通过: min|ν| = {gap:.6g}")
    return gap
