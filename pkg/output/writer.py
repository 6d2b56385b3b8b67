# output/writer.py

import os
import json # 结果文档
import logging
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import scipy.sparse as sps

import config # 绝对导入 config 模块
from discretization.assembly import AssembledOperators
from discretization.grid import Grid
from models.reports import LimitRow, Spinor

# 获取当前模块的日志记录器
logger = logging.getLogger(__name__)


def _ensure_output_dir_exists(out_dir: str):
    """确保输出目录存在，如果不存在则创建。"""
    os.makedirs(out_dir, exist_ok=True)


def _number(value: float) -> str:
    # repr 保证同一数值总是写成同一字符串
    return repr(float(value))


def render_document(document: Dict[str, Any]) -> str:
    """键排序、缩进固定的 JSON 文本；相同内容总是得到相同字节。"""
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def _write_lines(path: str, header: str, rows: Iterable[str]) -> int:
    count = 0
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(header + '\n')
        for row in rows:
            f.write(row + '\n')
            count += 1
    return count


def write_document(document: Dict[str, Any], out_dir: str = config.OUTPUT_DIR,
                   filename: str = config.DOCUMENT_FILENAME) -> str:
    """
    把结果文档写成 JSON 文件。
    Args:
        document: 已包含 config 与 graph_hash 的结果字典。
        out_dir: 输出目录。
        filename: 文件名。
    Returns:
        str: 写入的路径。
    """
    _ensure_output_dir_exists(out_dir)
    output_path = os.path.join(out_dir, filename)
    try:
        with open(output_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(render_document(document))
        logger.info(f"结果文档已写入: {output_path}")
    except IOError as e:
        logger.error(f"写入结果文档失败: {e}")
        raise
    return output_path


def write_state_csv(grid: Grid, u: np.ndarray, out_dir: str = config.OUTPUT_DIR,
                    filename: str = config.STATE_FILENAME) -> str:
    """逐边写出 (edge, x, value)，用于绘图；截断端的 0 也写出。"""
    _ensure_output_dir_exists(out_dir)
    output_path = os.path.join(out_dir, filename)
    rows = (f"{edge},{_number(x)},{_number(np.real(value))}" for edge, x, value in grid.edge_samples(u))
    count = _write_lines(output_path, "edge,x,value", rows)
    logger.info(f"状态采样 {count} 行已写入: {output_path}")
    return output_path


def write_spinor_csv(grid: Grid, spinor: Spinor, out_dir: str = config.OUTPUT_DIR,
                     filename: str = config.STATE_FILENAME) -> str:
    """
    旋量的采样：φ 在节点上，χ 在单元中点上。
    列为 (component, edge, x, re, im)。
    """
    _ensure_output_dir_exists(out_dir)
    output_path = os.path.join(out_dir, filename)

    def rows():
        for edge, x, value in grid.edge_samples(spinor.phi):
            yield f"phi,{edge},{_number(x)},{_number(value.real)},{_number(value.imag)}"
        offset = 0
        for e in grid.edges:
            chi = spinor.chi[offset:offset + e.n_elements]
            offset += e.n_elements
            for x, value in zip(e.midpoints, chi):
                yield f"chi,{e.name},{_number(x)},{_number(value.real)},{_number(value.imag)}"

    count = _write_lines(output_path, "component,edge,x,re,im", rows())
    logger.info(f"旋量采样 {count} 行已写入: {output_path}")
    return output_path


def write_limit_table(rows: List[LimitRow], out_dir: str = config.OUTPUT_DIR,
                      filename: str = config.LIMIT_TABLE_FILENAME) -> str:
    """非相对论极限表，每个 c 一行。"""
    _ensure_output_dir_exists(out_dir)
    output_path = os.path.join(out_dir, filename)
    lines = (",".join(_number(v) for v in (r.c, r.omega, r.chi_l2, r.phi_minus_u_h1, r.nlse_residual))
             for r in rows)
    count = _write_lines(output_path, "c,omega,chi_l2,phi_minus_u_h1,nlse_residual", lines)
    if count == 0:
        logger.warning(f"极限表为空: {output_path}")
    else:
        logger.info(f"极限表 {count} 行已写入: {output_path}")
    return output_path


def write_profile_csv(x: np.ndarray, values: np.ndarray, out_dir: str = config.OUTPUT_DIR,
                      filename: str = config.PROFILE_FILENAME) -> str:
    """一维剖面 (x, value)，用于重排结果。"""
    _ensure_output_dir_exists(out_dir)
    output_path = os.path.join(out_dir, filename)
    count = _write_lines(output_path, "x,value",
                         (f"{_number(a)},{_number(b)}" for a, b in zip(x, values)))
    logger.info(f"剖面 {count} 行已写入: {output_path}")
    return output_path


def dump_matrix(matrix, path: str):
    """坐标格式：每行 'row col value'，复数写成 're im' 两列。"""
    coo = sps.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for k in order:
            value = coo.data[k]
            if np.iscomplexobj(coo.data):
                f.write(f"{coo.row[k]} {coo.col[k]} {_number(value.real)} {_number(value.imag)}\n")
            else:
                f.write(f"{coo.row[k]} {coo.col[k]} {_number(value)}\n")


def dump_operators(ops: AssembledOperators, out_dir: str = config.OUTPUT_DIR,
                   subdir: str = config.MATRIX_DUMP_DIR) -> List[str]:
    """--dump-matrices：写出已装配的稀疏矩阵，跳过未装配的部分。"""
    target = os.path.join(out_dir, subdir)
    _ensure_output_dir_exists(target)
    written = []
    matrices: Dict[str, Optional[Any]] = {
        'stiffness': ops.stiffness,
        'mass': ops.mass,
        'core_mass': ops.core_mass,
        'dirac': ops.dirac,
        'dirac_mass': None if ops.dirac_mass is None else sps.diags(ops.dirac_mass),
    }
    for name, matrix in matrices.items():
        if matrix is None:
            continue
        path = os.path.join(target, f"{name}.coo")
        dump_matrix(matrix, path)
        written.append(path)
    logger.info(f"已导出 {len(written)} 个矩阵到 {target}")
    return written
