# main.py

import os
import sys
import asyncio
import logging
import argparse
from typing import Any, Dict, List, Optional

# 注意：这里都是绝对导入，直接从根目录下的模块或子包导入
import config # 导入 config.py
from dirac.limit import nonrel_limit, observed_rate
from dirac.nlde import bound_state, spinor_norms
from discretization.assembly import assemble_dirac
from discretization.grid import build_grid
from models.errors import GratwaveError, ParameterError, SolverFailure
from models.metric_graph import MetricGraph
from models.run_config import RunConfig
from nls.classify import C4_CONVENTION, classify_critical, classify_subcritical, nonexistence_check
from nls.competitor import competitor_certificate, critical_constants
from nls.gn import gn_constant
from nls.variational import NlsProblem, ground_state
from output.writer import (dump_operators, render_document, write_document, write_limit_table,
                           write_profile_csv, write_spinor_csv, write_state_csv)
from parser.parser import graph_hash, load_graph
from rearrangement.rearrange import (decreasing_rearrangement, field_norms, has_two_preimages,
                                     profile_norms, symmetric_rearrangement)
from topology.classifier import classify_topology
from validator.validator import ConfigValidator, run_sweep

logger = logging.getLogger(__name__)

SWEEP_FILENAME = "sweep.json"


def build_arg_parser() -> argparse.ArgumentParser:
    """命令行：每个子命令共享同一组全局参数，缺省为 None 以便 YAML 配置生效。"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--graph', help="图描述文档路径")
    common.add_argument('--p', type=float, help="非线性指数 p")
    common.add_argument('--mass', dest='mu', type=float, help="质量 μ")
    common.add_argument('--alpha', type=float, help="δ 顶点耦合 α (0 为 Kirchhoff)")
    common.add_argument('--h', type=float, help=f"网格步长 (缺省 {config.H_STEP})")
    common.add_argument('--trunc', type=float, help=f"半直线截断长度 (缺省 {config.TRUNCATION_LENGTH})")
    common.add_argument('--tol', type=float, help=f"收敛阈值 (缺省 {config.SOLVER_TOL})")
    common.add_argument('--max-iter', dest='max_iter', type=int, help=f"最大迭代次数 (缺省 {config.MAX_ITER})")
    common.add_argument('--m', type=float, help="Dirac 质量参数 m")
    common.add_argument('--c', type=float, help="光速 c")
    common.add_argument('--c-schedule', dest='c_schedule', type=_schedule, help="逗号分隔的光速序列，如 2,4,8,16")
    common.add_argument('--lambda', dest='lam', type=float, help="NLS 乘子 λ")
    common.add_argument('--omega', type=float, help="NLDE 频率 ω")
    common.add_argument('--variant', choices=['whole-graph', 'core-restricted', 'sup-norm'], help="GN 常数类型")
    common.add_argument('--levels', type=int, help="GN 估计的嵌套加密层数")
    common.add_argument('--seed', choices=['competitor', 'bump'], help="基态初值")
    common.add_argument('--out', help=f"输出目录 (缺省 {config.OUTPUT_DIR})")
    common.add_argument('--format', choices=['json', 'csv'], help="标准输出的格式")
    common.add_argument('--dump-matrices', dest='dump_matrices', action='store_true', default=None,
                        help="导出装配好的稀疏矩阵 (坐标格式)")
    common.add_argument('--config', dest='config_path', help="YAML 运行配置；sweep 时为配置列表")
    common.add_argument('--log-level', dest='log_level', default=config.LOG_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help="日志级别")

    parser = argparse.ArgumentParser(prog='gratwave', description="度量图上紧核局部化非线性的驻波计算")
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('classify', parents=[common], help="拓扑与存在性判定")
    sub.add_parser('ground-state', parents=[common], help="给定质量的 NLS 基态")
    sub.add_parser('gn', parents=[common], help="Gagliardo-Nirenberg 常数与临界质量")
    sub.add_parser('bound-state', parents=[common], help="给定频率的 NLDE 束缚态")
    sub.add_parser('nonrel-limit', parents=[common], help="c → ∞ 的非相对论极限表")
    sub.add_parser('rearrange', parents=[common], help="基态的单调与对称重排")
    sub.add_parser('sweep', parents=[common], help="并发执行 YAML 中的配置列表")
    return parser


def _schedule(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析光速序列 '{text}'")


def _cli_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {'config_path', 'log_level'}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def _load(cfg: RunConfig) -> MetricGraph:
    try:
        return load_graph(cfg.graph)
    except OSError as e:
        raise ParameterError(f"无法读取图文件 {cfg.graph}: {e}")


def _envelope(cfg: RunConfig, g: MetricGraph, result: Dict[str, Any]) -> Dict[str, Any]:
    """所有文档共用的外层：完整配置与图内容哈希。"""
    return {
        'command': cfg.command,
        'config': cfg.to_dict(),
        'graph_hash': graph_hash(g),
        'result': result,
    }


# ----------------------------------------------------------------------
# 各子命令
# ----------------------------------------------------------------------

def cmd_classify(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    """拓扑报告加上当前 p 适用的判定。"""
    result: Dict[str, Any] = {'topology': classify_topology(g).to_dict()}
    if cfg.p == 6:
        result['critical'] = classify_critical(g, h=cfg.h, trunc=cfg.trunc).to_dict()
    elif 4 <= cfg.p < 6:
        if cfg.mu is not None:
            result['subcritical'] = classify_subcritical(g, cfg.mu, cfg.p, h=cfg.h, trunc=cfg.trunc).to_dict()
            result['nonexistence'] = nonexistence_check(g, cfg.mu, cfg.p, h=cfg.h, trunc=cfg.trunc).to_dict()
        else:
            result['note'] = "subcritical verdicts need --mass"
    else:
        result['note'] = "verdicts are stated for p in [4, 6]"
    if cfg.mu is not None and cfg.p < 6:
        result['competitor'] = competitor_certificate(g, cfg.mu, cfg.p)
    result['convention'] = C4_CONVENTION
    return _envelope(cfg, g, result)


def cmd_ground_state(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    prob = NlsProblem.create(g, cfg.p, cfg.mu, h=cfg.h, trunc=cfg.trunc, alpha=cfg.alpha)
    if cfg.dump_matrices:
        dump_operators(prob.ops, cfg.out)
    try:
        report = ground_state(prob, seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter)
    except SolverFailure as e:
        if e.partial is not None:
            write_state_csv(prob.grid, e.partial.state, cfg.out)
        raise
    write_state_csv(prob.grid, report.state, cfg.out)
    result = report.to_dict()
    result['max_value'] = float(report.state.max())
    result['grid'] = {'h': prob.grid.h, 'trunc': prob.grid.trunc, 'dofs': prob.grid.n_dofs}
    return _envelope(cfg, g, result)


def cmd_gn(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    estimate = gn_constant(g, cfg.p, cfg.variant, h=cfg.h, trunc=cfg.trunc, levels=cfg.levels)
    result = estimate.to_dict()
    result['reference'] = critical_constants()
    return _envelope(cfg, g, result)


def cmd_bound_state(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    grid = build_grid(g, cfg.h, cfg.trunc)
    ops = assemble_dirac(grid, cfg.m, cfg.c)
    if cfg.dump_matrices:
        dump_operators(ops, cfg.out)
    report = bound_state(cfg.omega, cfg.p, ops, tol=cfg.tol)
    write_spinor_csv(grid, report.spinor, cfg.out)
    result = report.to_dict()
    result['norms'] = spinor_norms(report.spinor, ops, cfg.p)
    return _envelope(cfg, g, result)


def cmd_nonrel_limit(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    try:
        rows = nonrel_limit(g, cfg.lam, cfg.m, cfg.p, cfg.c_schedule, h=cfg.h, trunc=cfg.trunc,
                            tol=cfg.tol, max_iter=cfg.max_iter)
    except SolverFailure as e:
        # 已完成的行仍然写出
        if e.partial:
            write_limit_table(e.partial, cfg.out)
        raise
    write_limit_table(rows, cfg.out)
    result = {
        'rows': [row.to_dict() for row in rows],
        'chi_decreasing': all(b.chi_l2 < a.chi_l2 for a, b in zip(rows, rows[1:])),
        'observed_rate': observed_rate(rows),
    }
    return _envelope(cfg, g, result)


def cmd_rearrange(cfg: RunConfig, g: MetricGraph) -> Dict[str, Any]:
    prob = NlsProblem.create(g, cfg.p, cfg.mu, h=cfg.h, trunc=cfg.trunc, alpha=cfg.alpha)
    report = ground_state(prob, seed=cfg.seed, tol=cfg.tol, max_iter=cfg.max_iter)
    star = decreasing_rearrangement(report.state, prob.grid)
    hat = symmetric_rearrangement(report.state, prob.grid)
    write_profile_csv(star.x, star.values, cfg.out)
    write_profile_csv(hat.x, hat.values, cfg.out, filename="symmetric_" + config.PROFILE_FILENAME)
    result = {
        'ground_state': report.to_dict(),
        'field': field_norms(report.state, prob.grid),
        'decreasing': profile_norms(star),
        'symmetric': profile_norms(hat),
        'two_preimages': has_two_preimages(report.state, prob.grid),
    }
    return _envelope(cfg, g, result)


HANDLERS = {
    'classify': cmd_classify,
    'ground-state': cmd_ground_state,
    'gn': cmd_gn,
    'bound-state': cmd_bound_state,
    'nonrel-limit': cmd_nonrel_limit,
    'rearrange': cmd_rearrange,
}


def run_command(cfg: RunConfig) -> Dict[str, Any]:
    """校验配置、执行子命令并写出结果文档，返回文档。"""
    ConfigValidator().validate(cfg)
    g = _load(cfg)
    logger.info(f"执行 {cfg.command}: {cfg.graph} ({len(g.bounded_edges)} 条有界边, {g.n_halflines} 条半直线)")
    document = HANDLERS[cfg.command](cfg, g)
    write_document(document, cfg.out)
    return document


def run_sweep_command(base: RunConfig, config_path: Optional[str]) -> int:
    """
    sweep：YAML 文件为配置列表（或含 runs 列表的映射，其余键作为公共设置），
    第 k 项输出到 <out>/run_<k>/。
    """
    if not config_path:
        raise ParameterError("sweep 需要 --config 指定配置列表")
    data = RunConfig.load_yaml(config_path)
    if isinstance(data, dict):
        runs = data.get('runs')
        shared = {k: v for k, v in data.items() if k != 'runs'}
        base = RunConfig.from_mapping(shared, base)
    else:
        runs = data
    if not isinstance(runs, list) or not runs:
        raise ParameterError(f"{config_path} 中没有配置列表")

    configs = []
    for index, item in enumerate(runs):
        if not isinstance(item, dict):
            raise ParameterError(f"第 {index + 1} 项配置不是映射")
        cfg = RunConfig.from_mapping(item, base)
        cfg.out = os.path.join(base.out, f"run_{index:03d}")
        configs.append(cfg)

    results = asyncio.run(run_sweep(configs, run_command))
    summary = {
        'command': 'sweep',
        'runs': [{k: v for k, v in r.items() if k != 'document'} for r in results],
    }
    write_document(summary, base.out, SWEEP_FILENAME)
    if base.format == 'json':
        sys.stdout.write(render_document(summary))
    return max((r['exit_code'] for r in results), default=0)


def _emit(document: Dict[str, Any], cfg: RunConfig):
    if cfg.format == 'json':
        sys.stdout.write(render_document(document))
        return
    # csv：输出主表格
    primary = {
        'ground-state': config.STATE_FILENAME,
        'bound-state': config.STATE_FILENAME,
        'nonrel-limit': config.LIMIT_TABLE_FILENAME,
        'rearrange': config.PROFILE_FILENAME,
    }.get(cfg.command)
    if primary is None:
        sys.stdout.write(render_document(document))
        return
    with open(os.path.join(cfg.out, primary), 'r', encoding='utf-8') as f:
        sys.stdout.write(f.read())


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口，返回退出码：0 成功，2 输入错误，3 拒绝的参数区域，4 求解失败。
    """
    parser = build_arg_parser()
    args = parser.parse_args(argv)

    # 配置日志，日志只写到 stderr，标准输出留给结果文档
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format='%(asctime)s - %(levelname)s - %(message)s', # 日志格式：时间 - 级别 - 消息
        datefmt='%Y-%m-%d %H:%M:%S' # 时间格式
    )

    try:
        if args.command == 'sweep':
            base = RunConfig.from_mapping(_cli_overrides(args))
            return run_sweep_command(base, args.config_path)
        cfg = RunConfig.resolve(_cli_overrides(args), args.config_path)
        if cfg.command in ('ground-state', 'rearrange') and cfg.mu is None:
            parser.error(f"{cfg.command} 需要 --mass")
        document = run_command(cfg)
        _emit(document, cfg)
        return 0
    except GratwaveError as e:
        logging.error(str(e))
        sys.stderr.write(f"gratwave: {e}\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
