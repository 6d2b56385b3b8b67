# dirac/nlde.py

import logging
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

import config
from discretization.assembly import AssembledOperators, assemble_laplacian, certify_spectral_gap, difference_matrix
from models.errors import GridError, ParameterError, SolverFailure
from models.reports import NldeReport, Spinor

logger = logging.getLogger(__name__)

# 非线性项用单元中点求积：∫_K|ψ|^p ≈ Σ_{e⊂K} h (|φ_m|² + |χ_e|²)^{p/2}，φ_m 为两端节点的平均。


def _check(spinor: Spinor, ops: AssembledOperators):
    if spinor.phi.shape != (ops.n_phi,) or spinor.chi.shape != (ops.n_chi,):
        raise GridError(f"旋量尺寸 ({spinor.phi.size}, {spinor.chi.size}) 与网格 ({ops.n_phi}, {ops.n_chi}) 不一致",
                        kind="grid mismatch")


def check_frequency(omega: float, ops: AssembledOperators):
    gap = ops.m * ops.c ** 2
    if not -gap < omega < gap:
        raise ParameterError(f"频率 ω={omega} 不在谱隙 (-mc², mc²) = ({-gap:.6g}, {gap:.6g}) 内",
                             kind="outside spectral gap")


def _midpoint_density(phi: np.ndarray, chi: np.ndarray, ops: AssembledOperators):
    """核上单元的 (φ_m, χ, |ψ|²)。"""
    grid = ops.grid
    core = grid.core
    pa, pb = grid.element_values(phi)
    phi_m = 0.5 * (pa[core] + pb[core])
    chi_core = chi[core]
    return phi_m, chi_core, np.abs(phi_m) ** 2 + np.abs(chi_core) ** 2


def nonlinear_power(spinor: Spinor, ops: AssembledOperators, p: float) -> float:
    """∫_K|ψ|^p（中点求积）。"""
    _, _, rho = _midpoint_density(spinor.phi, spinor.chi, ops)
    return float(np.sum(ops.grid.steps[ops.grid.core] * rho ** (p / 2)))


def nonlinear_load(phi: np.ndarray, chi: np.ndarray, ops: AssembledOperators, p: float):
    """(1/p)∫_K|ψ|^p 对 (φ, χ) 的梯度，即离散的 χ_K|ψ|^{p-2}ψ。"""
    grid = ops.grid
    core = grid.core
    h = grid.steps[core]
    phi_m, chi_core, rho = _midpoint_density(phi, chi, ops)
    weight = h * rho ** ((p - 2) / 2)
    half = 0.5 * weight * phi_m
    load_phi = grid.accumulate(grid.left[core], half) + grid.accumulate(grid.right[core], half)
    load_chi = np.zeros(ops.n_chi, dtype=np.result_type(chi, float))
    load_chi[core] = weight * chi_core
    return load_phi, load_chi


def _nonlinear_hessian(f: np.ndarray, g: np.ndarray, ops: AssembledOperators, p: float) -> sps.csr_matrix:
    """实坐标 x = (f, g) 下非线性势的 Hessian（对称）。"""
    grid = ops.grid
    core = np.flatnonzero(grid.core)
    h = grid.steps[core]
    fa, fb = grid.element_values(f)
    fm = 0.5 * (fa[core] + fb[core])
    gm = g[core]
    rho = fm ** 2 + gm ** 2
    q = (p - 2) / 2
    s = rho ** q
    safe = np.where(rho > 0, rho, 1.0)
    ds = np.where(rho > 0, q * safe ** (q - 1), 0.0)

    ff = 0.5 * h * (ds * fm ** 2 + 0.5 * s)
    fg = h * ds * gm * fm
    gg = h * (2 * ds * gm ** 2 + s)
    left, right = grid.left[core], grid.right[core]
    chi_index = ops.n_phi + core
    rows = np.concatenate([left, left, right, right, left, right, chi_index, chi_index, chi_index])
    cols = np.concatenate([left, right, left, right, chi_index, chi_index, left, right, chi_index])
    vals = np.concatenate([ff, ff, ff, ff, fg, fg, fg, fg, gg])
    n = ops.n_phi + ops.n_chi
    return sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def nlde_function(spinor: Spinor, omega: float, ops: AssembledOperators, p: float) -> np.ndarray:
    """F(ψ) = Hψ - ωBψ - N(ψ)（复形式，与相位变换对易）。"""
    _check(spinor, ops)
    psi = spinor.stacked()
    load_phi, load_chi = nonlinear_load(spinor.phi, spinor.chi, ops, p)
    return ops.dirac @ psi - omega * ops.dirac_mass * psi - np.concatenate([load_phi, load_chi])


def nlde_residual(spinor: Spinor, omega: float, ops: AssembledOperators, p: float) -> float:
    """sqrt(Fᴴ B⁻¹ F)。"""
    F = nlde_function(spinor, omega, ops, p)
    return float(np.sqrt(np.real(np.vdot(F, F / ops.dirac_mass))))


def action(spinor: Spinor, omega: float, ops: AssembledOperators, p: float, coef: float = 1.0) -> float:
    """
    L(ψ) = ½⟨ψ, Hψ⟩ - (ω/2)‖ψ‖² - (coef/p)∫_K|ψ|^p，|ψ|² = |φ|² + |χ|²。
    coef = 0 时只剩二次型。
    """
    _check(spinor, ops)
    psi = spinor.stacked()
    quadratic = 0.5 * np.real(np.vdot(psi, ops.dirac @ psi))
    norm2 = np.real(np.vdot(psi, ops.dirac_mass * psi))
    return float(quadratic - 0.5 * omega * norm2 - coef / p * nonlinear_power(spinor, ops, p))


def spinor_norms(spinor: Spinor, ops: AssembledOperators, p: float) -> Dict[str, float]:
    w_phi, w_chi = ops.dirac_mass[:ops.n_phi], ops.dirac_mass[ops.n_phi:]
    phi2 = float(np.sum(w_phi * np.abs(spinor.phi) ** 2))
    chi2 = float(np.sum(w_chi * np.abs(spinor.chi) ** 2))
    return {
        'phi_l2': np.sqrt(phi2),
        'chi_l2': np.sqrt(chi2),
        'l2': np.sqrt(phi2 + chi2),
        'lp_core': nonlinear_power(spinor, ops, p) ** (1.0 / p),
    }


def lift_nls_state(u: np.ndarray, omega: float, ops: AssembledOperators) -> Spinor:
    """φ = u，χ = -(ic/(ω + mc²))·u'（单元中点处的差商）。"""
    if u.shape != (ops.n_phi,):
        raise GridError(f"NLS 状态长度 {u.shape} 与网格不一致", kind="grid mismatch")
    chi = -1j * ops.c / (omega + ops.m * ops.c ** 2) * (difference_matrix(ops.grid) @ u)
    return Spinor(u.astype(complex), chi, ops.m, ops.c)


def default_seed(omega: float, ops: AssembledOperators, p: float, tol: float = config.SOLVER_TOL) -> Spinor:
    """
    消去 χ 后 φ 近似满足 -Δφ - ((mc²+ω)/c²)|φ|^{p-2}φ = ((ω² - m²c⁴)/c²) φ，
    用该 NLS 方程的束缚态做提升。
    """
    from nls.variational import NlsProblem, bound_state_at_multiplier # 避免循环导入
    m, c = ops.m, ops.c
    lam = (omega ** 2 - (m * c * c) ** 2) / c ** 2
    coef = (m * c * c + omega) / c ** 2
    grid = ops.grid
    prob = NlsProblem(grid.graph, grid, assemble_laplacian(grid), p, 1.0, coef)
    u = bound_state_at_multiplier(prob, lam, tol=max(tol, 1e-8)).state
    return lift_nls_state(u, omega, ops)


def _to_real(spinor: Spinor) -> np.ndarray:
    """ψ = (f, i g) → x = (f, g)。"""
    return np.concatenate([spinor.phi.real, spinor.chi.imag])


def _from_real(x: np.ndarray, ops: AssembledOperators) -> Spinor:
    return Spinor(x[:ops.n_phi].astype(complex), 1j * x[ops.n_phi:], ops.m, ops.c)


def real_function(x: np.ndarray, omega: float, ops: AssembledOperators, p: float) -> np.ndarray:
    f, g = x[:ops.n_phi], x[ops.n_phi:]
    load_phi, load_chi = nonlinear_load(f, g, ops, p)
    return ops.dirac_real @ x - omega * ops.dirac_mass * x - np.concatenate([load_phi, load_chi])


def real_jacobian(x: np.ndarray, omega: float, ops: AssembledOperators, p: float) -> sps.csr_matrix:
    f, g = x[:ops.n_phi], x[ops.n_phi:]
    return (ops.dirac_real - sps.diags(omega * ops.dirac_mass) - _nonlinear_hessian(f, g, ops, p)).tocsr()


def bound_state(omega: float, p: float, ops: AssembledOperators, seed: Optional[Spinor] = None,
                tol: float = config.SOLVER_TOL, max_iter: int = config.NEWTON_MAX_ITER,
                certify: bool = True) -> NldeReport:
    """
    NLDE 束缚态 Dψ - χ_K|ψ|^{p-2}ψ = ωψ，ω ∈ (-mc², mc²)。
    在实坐标 (φ, χ) = (f, i g) 下做阻尼 Newton，Armijo 作用于 ‖F‖²_{B⁻¹}。
    Args:
        omega: 频率。
        p: 指数。
        ops: assemble_dirac 得到的算子。
        seed: 初始旋量；缺省时提升 NLS 束缚态。
        certify: 是否先验证离散自由算子的谱隙。
    Returns:
        NldeReport
    """
    if not 2 < p < 6:
        raise ParameterError(f"指数 p={p} 必须位于 (2, 6)")
    check_frequency(omega, ops)
    if certify:
        certify_spectral_gap(ops)
    if seed is None:
        seed = default_seed(omega, ops, p, tol)
    _check(seed, ops)
    # 固定规范：φ 的总和取为正实数
    total = np.sum(seed.phi)
    if abs(total) > 0:
        seed = seed * np.exp(-1j * np.angle(total))

    x = _to_real(seed)
    weights = ops.dirac_mass
    if np.sqrt(np.sum(weights * x * x)) < config.TRIVIAL_NORM:
        raise SolverFailure("初始旋量为零, Newton 只能收敛到平凡解", kind="trivial solution")

    F = real_function(x, omega, ops, p)
    merit = float(np.sum(F * F / weights))
    iterations = 0
    while np.sqrt(merit) >= tol and iterations < max_iter:
        iterations += 1
        delta = spla.spsolve(real_jacobian(x, omega, ops, p).tocsc(), -F)
        step = 1.0
        while True:
            candidate = x + step * delta
            F_candidate = real_function(candidate, omega, ops, p)
            candidate_merit = float(np.sum(F_candidate * F_candidate / weights))
            if candidate_merit <= (1 - 2 * config.ARMIJO_C * step) * merit:
                break
            step *= 0.5
            if step < config.NEWTON_MIN_STEP:
                raise SolverFailure(f"Newton 在残差 {np.sqrt(merit):.3e} 处停滞", kind="newton stagnation")
        x, F, merit = candidate, F_candidate, candidate_merit
        if np.sqrt(np.sum(weights * x * x)) < config.TRIVIAL_NORM:
            raise SolverFailure("Newton 迭代坍缩到零解", kind="trivial solution")
        logger.debug(f"NLDE Newton 第 {iterations} 步: 步长 {step:g}, 残差 {np.sqrt(merit):.3e}")

    spinor = _from_real(x, ops)
    res = nlde_residual(spinor, omega, ops, p)
    report = NldeReport(spinor=spinor, omega=omega, action=action(spinor, omega, ops, p),
                        residual=res, iterations=iterations, converged=res < tol)
    if not report.converged:
        raise SolverFailure(f"NLDE Newton {max_iter} 步内未收敛, 残差 {res:.3e}")
    logger.info(f"NLDE 束缚态: ω={omega}, c={ops.c}, 作用量 {report.action:.10g}, 残差 {res:.2e}")
    return report
