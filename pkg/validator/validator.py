# validator/validator.py

import os
import math
import asyncio
import logging
from typing import Any, Callable, Dict, List, Optional

import config # 绝对导入 config 模块
from models.errors import GratwaveError, ParameterError
from models.run_config import RunConfig

# 获取当前模块的日志记录器
logger = logging.getLogger(__name__)

COMMANDS = ('classify', 'ground-state', 'gn', 'bound-state', 'nonrel-limit', 'rearrange')
VARIANTS = ('whole-graph', 'core-restricted', 'sup-norm')


class ConfigValidator:
    """在分派给各模块之前检查 RunConfig 是否满足模块的前提条件。"""

    def __init__(self):
        # 实例化时初始化日志记录器
        self.logger = logging.getLogger(__name__)

    def _positive(self, name: str, value: Any):
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not math.isfinite(value) or value <= 0:
            raise ParameterError(f"参数 {name}={value!r} 必须是有限正数")

    def _real(self, name: str, value: Any):
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ParameterError(f"参数 {name}={value!r} 必须是有限实数")

    def _check_common(self, cfg: RunConfig):
        if cfg.command not in COMMANDS:
            raise ParameterError(f"未知命令 '{cfg.command}'，可选: {', '.join(COMMANDS)}")
        if not cfg.graph:
            raise ParameterError("缺少图文件 (--graph)")
        for name in ('h', 'trunc', 'tol', 'max_iter'):
            self._positive(name, getattr(cfg, name))
        self._real('alpha', cfg.alpha)
        self._real('p', cfg.p)
        if not 2 < cfg.p <= 6:
            raise ParameterError(f"指数 p={cfg.p} 必须位于 (2, 6]")
        if cfg.format not in ('json', 'csv'):
            raise ParameterError(f"输出格式 '{cfg.format}' 只能是 json 或 csv")
        if cfg.seed not in ('competitor', 'bump'):
            raise ParameterError(f"初值 '{cfg.seed}' 只能是 competitor 或 bump")

    def validate(self, cfg: RunConfig) -> RunConfig:
        """
        检查配置，合法时原样返回。
        Raises:
            ParameterError: 任何参数不满足前提条件。
        """
        self._check_common(cfg)
        command = cfg.command
        if command in ('ground-state', 'rearrange'):
            if cfg.mu is None:
                raise ParameterError(f"命令 {command} 需要质量 --mass")
            self._positive('mass', cfg.mu)
        if command == 'classify' and cfg.mu is not None:
            self._positive('mass', cfg.mu)
        if command == 'gn':
            if cfg.variant not in VARIANTS:
                raise ParameterError(f"GN 常数类型 '{cfg.variant}' 只能是 {', '.join(VARIANTS)}")
            if not isinstance(cfg.levels, int) or cfg.levels < 1:
                raise ParameterError(f"加密层数 levels={cfg.levels!r} 必须是正整数")
        if command in ('bound-state', 'nonrel-limit'):
            self._positive('m', cfg.m)
            if not cfg.p < 6:
                raise ParameterError(f"NLDE 要求 p ∈ (2, 6), 收到 p={cfg.p}")
        if command == 'bound-state':
            self._positive('c', cfg.c)
            if cfg.omega is None:
                raise ParameterError("命令 bound-state 需要频率 --omega")
            self._real('omega', cfg.omega)
            gap = cfg.m * cfg.c ** 2
            if not -gap < cfg.omega < gap:
                raise ParameterError(f"频率 ω={cfg.omega} 不在谱隙 (-mc², mc²) 内", kind="outside spectral gap")
        if command == 'nonrel-limit':
            if cfg.lam is None:
                raise ParameterError("命令 nonrel-limit 需要乘子 --lambda")
            self._real('lambda', cfg.lam)
            if not cfg.lam < 0:
                raise ParameterError(f"非相对论极限要求 λ < 0, 收到 λ={cfg.lam}")
            schedule = list(cfg.c_schedule)
            if not schedule:
                raise ParameterError("光速序列为空")
            for c in schedule:
                self._positive('c', c)
            if any(b <= a for a, b in zip(schedule, schedule[1:])):
                raise ParameterError(f"光速序列必须严格递增: {schedule}")
        self.logger.debug(f"配置通过检查: {cfg.command} {cfg.graph}")
        return cfg


def sweep_concurrency() -> int:
    """并发上限：环境变量 GRATWAVE_THREADS，缺省为 config.MAX_CONCURRENT_RUNS。"""
    raw = os.environ.get(config.THREADS_ENV)
    if not raw:
        return config.MAX_CONCURRENT_RUNS
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"环境变量 {config.THREADS_ENV}={raw!r} 不是整数")
    if value < 1:
        raise ParameterError(f"环境变量 {config.THREADS_ENV}={value} 必须至少为 1")
    return value


async def run_sweep(configs: List[RunConfig], runner: Callable[[RunConfig], Dict[str, Any]],
                    limit: Optional[int] = None) -> List[Dict[str, Any]]:
    """
    异步函数：并发执行一组相互独立的配置。
    每个配置在工作线程里运行 runner；失败的配置记录错误而不影响其他配置。
    Args:
        configs (List[RunConfig]): 配置列表。
        runner: 执行单个配置、返回结果文档的函数。
        limit (Optional[int]): 最大并发数，缺省见 sweep_concurrency()。
    Returns:
        List[Dict[str, Any]]: 与输入顺序一致的结果，每项含 status 以及 document 或 error。
    """
    semaphore = asyncio.Semaphore(limit or sweep_concurrency())

    async def limited_run(index: int, cfg: RunConfig) -> Dict[str, Any]:
        """带有并发限制的执行包装器。"""
        async with semaphore:
            logger.info(f"sweep 第 {index + 1}/{len(configs)} 项开始: {cfg.command}")
            try:
                document = await asyncio.to_thread(runner, cfg)
                return {'index': index, 'status': 'ok', 'exit_code': 0, 'document': document}
            except GratwaveError as e:
                logger.warning(f"sweep 第 {index + 1} 项失败: {e}")
                return {'index': index, 'status': 'error', 'exit_code': e.exit_code,
                        'error': {'kind': e.kind, 'message': e.message}, 'config': cfg.to_dict()}

    # gather 按提交顺序返回结果，与完成顺序无关
    results = await asyncio.gather(*(limited_run(i, cfg) for i, cfg in enumerate(configs)))
    failed = sum(1 for r in results if r['status'] != 'ok')
    logger.info(f"sweep 完成: {len(results)} 项, 失败 {failed} 项")
    return list(results)
