# models/run_config.py

import logging
from dataclasses import dataclass, field, fields, asdict
from typing import Any, Dict, List, Optional

import yaml # 用于读取 --config 指定的运行配置

import config
from models.errors import ParameterError

logger = logging.getLogger(__name__)

# YAML 文件和命令行里使用的别名
_ALIASES = {'mass': 'mu', 'lambda': 'lam', 'max-iter': 'max_iter', 'c-schedule': 'c_schedule',
            'trunc': 'trunc', 'L_trunc': 'trunc', 'dump-matrices': 'dump_matrices'}


@dataclass
class RunConfig:
    """
    一次运行的完整参数。优先级：命令行 > YAML 文件 > config.py 默认值。
    to_dict() 的结果原样嵌入每个输出文档。
    """
    command: str = "classify"
    graph: Optional[str] = None
    p: float = 4.0
    mu: Optional[float] = None
    alpha: float = config.DEFAULT_ALPHA
    h: float = config.H_STEP
    trunc: float = config.TRUNCATION_LENGTH
    tol: float = config.SOLVER_TOL
    max_iter: int = config.MAX_ITER
    m: float = config.DEFAULT_M
    c: float = config.DEFAULT_C
    c_schedule: List[float] = field(default_factory=lambda: list(config.DEFAULT_C_SCHEDULE))
    lam: Optional[float] = None
    omega: Optional[float] = None
    variant: str = "whole-graph"
    seed: str = "competitor"
    levels: int = config.GN_LEVELS
    out: str = config.OUTPUT_DIR
    format: str = "json"
    dump_matrices: bool = False

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, data: Dict[str, Any], base: Optional["RunConfig"] = None) -> "RunConfig":
        """在 base（缺省为默认值）之上覆盖 data 中非 None 的键，未知键报错。"""
        values = asdict(base) if base is not None else asdict(cls())
        known = set(cls.field_names())
        for key, value in (data or {}).items():
            name = _ALIASES.get(key, key).replace('-', '_')
            if name not in known:
                raise ParameterError(f"未知的配置项 '{key}'")
            if value is not None:
                values[name] = value
        return cls(**values)

    @classmethod
    def load_yaml(cls, path: str) -> Dict[str, Any]:
        """读取 YAML 运行配置，返回映射（sweep 文件可以是映射列表）。"""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ParameterError(f"无法读取配置文件 {path}: {e}")
        except yaml.YAMLError as e:
            raise ParameterError(f"配置文件 {path} 不是合法的 YAML: {e}")
        logger.debug(f"读取配置文件 {path}")
        return data if data is not None else {}

    @classmethod
    def resolve(cls, cli: Dict[str, Any], config_path: Optional[str] = None) -> "RunConfig":
        base = None
        if config_path:
            data = cls.load_yaml(config_path)
            if not isinstance(data, dict):
                raise ParameterError(f"配置文件 {config_path} 顶层必须是映射")
            base = cls.from_mapping(data)
        return cls.from_mapping(cli, base)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['c_schedule'] = [float(c) for c in self.c_schedule]
        return data
