"""
项目配置文件
环境变量默认值、配置文件读取、命令行参数解析与运行配置校验
"""

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from dotenv import dotenv_values, load_dotenv

from src.stochastic.loewner import upper_half_plane_grid

# 加载环境变量
load_dotenv()


Number = Union[Fraction, float]

COMMANDS = ("nullvector", "link", "simulate", "martingale", "module-mc")
STOCHASTIC_COMMANDS = ("simulate", "martingale", "module-mc")
FORMATS = ("csv", "json")

# SLE_POINTS 为空时按子命令取默认种子点；grid 为上半平面网格
DEFAULT_POINTS = {"simulate": "grid"}
REAL_POINTS = "0.5,1.0,2.0"

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class ConfigError(ValueError):
    """配置错误，flag 为出错的命令行参数名"""

    def __init__(self, flag: str, message: str):
        self.flag = flag
        self.message = message
        super().__init__(f"{flag}: {message}")


class Config:
    """项目配置类"""

    # 模拟默认参数
    SLE_DT: float = float(os.getenv("SLE_DT", "1e-3"))
    SLE_T_MAX: float = float(os.getenv("SLE_T_MAX", "0.5"))
    SLE_N_PATHS: int = int(os.getenv("SLE_N_PATHS", "10000"))
    SLE_SEED: int = int(os.getenv("SLE_SEED", "0"))
    SLE_SWALLOW_EPS: float = float(os.getenv("SLE_SWALLOW_EPS", "1e-6"))
    SLE_STOP_LEVEL: float = float(os.getenv("SLE_STOP_LEVEL", "0.05"))
    SLE_POINTS: str = os.getenv("SLE_POINTS", "")
    SLE_CHECKPOINTS: str = os.getenv("SLE_CHECKPOINTS", "0,0.1,0.25,0.5")

    # 模型参数（默认位于 Δ = 1/4 的对数零矢量处）
    SLE_DELTA: str = os.getenv("SLE_DELTA", "1/4")
    SLE_KAPPA: str = os.getenv("SLE_KAPPA", "4")
    SLE_KAPPA_HAT: str = os.getenv("SLE_KAPPA_HAT", "-16/3")

    # 截断模与并行配置
    SLE_LEVEL_CUTOFF: int = int(os.getenv("SLE_LEVEL_CUTOFF", "4"))
    SLE_WORKERS: int = int(os.getenv("SLE_WORKERS", "1"))
    SLE_BLOCK_SIZE: int = int(os.getenv("SLE_BLOCK_SIZE", "1000"))
    SLE_CLIP_QUANTILE: str = os.getenv("SLE_CLIP_QUANTILE", "")

    # 输出与日志
    SLE_FORMAT: str = os.getenv("SLE_FORMAT", "json")
    SLE_LOG_LEVEL: str = os.getenv("SLE_LOG_LEVEL", "WARNING")
    SLE_LOG_FILE: str = os.getenv("SLE_LOG_FILE", "")

    @classmethod
    def get_run_defaults(cls) -> Dict[str, Any]:
        """
        获取运行参数默认值字典（键与命令行参数同名，- 换成 _）

        Returns:
            默认值字典
        """
        return {
            "delta": cls.SLE_DELTA,
            "kappa": cls.SLE_KAPPA,
            "kappa_hat": cls.SLE_KAPPA_HAT,
            "dt": cls.SLE_DT,
            "t_max": cls.SLE_T_MAX,
            "seed": cls.SLE_SEED,
            "n_paths": cls.SLE_N_PATHS,
            "points": cls.SLE_POINTS,
            "checkpoints": cls.SLE_CHECKPOINTS,
            "swallow_eps": cls.SLE_SWALLOW_EPS,
            "stop_level": cls.SLE_STOP_LEVEL,
            "level_cutoff": cls.SLE_LEVEL_CUTOFF,
            "workers": cls.SLE_WORKERS,
            "block_size": cls.SLE_BLOCK_SIZE,
            "clip_quantile": cls.SLE_CLIP_QUANTILE or None,
            "format": cls.SLE_FORMAT,
            "out": None,
            "t": None,
        }

    @classmethod
    def get_logging_config(cls) -> Dict[str, Any]:
        return {"level": cls.SLE_LOG_LEVEL.upper(), "log_file": cls.SLE_LOG_FILE or None}


# ---------------------------------------------------------------------------
# 参数解析
# ---------------------------------------------------------------------------

def parse_rational(text: Any, flag: str = "--delta") -> Fraction:
    """
    解析形如 "p/q" 或整数的精确有理数

    Raises:
        ConfigError: 格式错误、分母为零或给出浮点数
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    match = _RATIONAL_RE.match(str(text))
    if not match:
        raise ConfigError(flag, f"malformed rational {text!r}, expected p/q")
    numerator, denominator = match.group(1), match.group(2)
    if denominator is not None and int(denominator) == 0:
        raise ConfigError(flag, f"zero denominator in {text!r}")
    return Fraction(int(numerator), int(denominator or 1))


def parse_number(text: Any, flag: str) -> Number:
    """解析实数参数：p/q 保持为精确有理数，其余按浮点数解析"""
    if isinstance(text, (Fraction, float)):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if _RATIONAL_RE.match(str(text)):
        return parse_rational(text, flag)
    try:
        return float(str(text))
    except ValueError:
        raise ConfigError(flag, f"malformed number {text!r}")


def _parse_point(token: str) -> Union[float, complex]:
    token = token.strip()
    if ":" in token:
        re_part, im_part = token.split(":", 1)
        value = complex(float(re_part), float(im_part))
        return value if value.imag != 0 else value.real
    if token.endswith("j") or token.endswith("i"):
        return complex(token.replace("i", "j"))
    return float(token)


def parse_points(text: Any, flag: str = "--points") -> List[Union[float, complex]]:
    """
    解析种子点列表：逗号分隔的实数、"re:im" 对或复数字面量（如 0.5+1j）；
    "grid" 表示默认的上半平面网格
    """
    if isinstance(text, (list, tuple)):
        return list(text)
    if str(text).strip().lower() == "grid":
        return [complex(p) for p in upper_half_plane_grid()]
    tokens = [t for t in str(text).split(",") if t.strip()]
    if not tokens:
        raise ConfigError(flag, "empty point list")
    try:
        points = [_parse_point(t) for t in tokens]
    except ValueError:
        raise ConfigError(flag, f"malformed point list {text!r}")
    if any(isinstance(p, complex) for p in points):
        return [complex(p) for p in points]
    return points


def parse_floats(text: Any, flag: str) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    tokens = [t for t in str(text).split(",") if t.strip()]
    try:
        return [float(parse_number(t, flag)) for t in tokens]
    except ConfigError:
        raise ConfigError(flag, f"malformed list {text!r}")


def format_point(point: Union[float, complex]) -> str:
    if isinstance(point, complex):
        return f"{point.real!r}:{point.imag!r}"
    return repr(float(point))


def load_config_file(path: str) -> Dict[str, str]:
    """
    读取 key = value 配置文件（TOML 子集），键中的 - 统一换成 _

    Raises:
        ConfigError: 文件不存在
    """
    if not os.path.isfile(path):
        raise ConfigError("--config", f"config file not found: {path}")
    values = dotenv_values(path)
    cleaned: Dict[str, str] = {}
    for key, value in values.items():
        if value is None:
            continue
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        cleaned[key.strip().replace("-", "_")] = value
    return cleaned


# ---------------------------------------------------------------------------
# 运行配置
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """一次命令行运行的完整配置"""

    command: str
    delta: Fraction = Fraction(1, 4)
    kappa: Number = Fraction(4)
    kappa_hat: Number = Fraction(-16, 3)
    dt: float = 1e-3
    t_max: float = 0.5
    seed: int = 0
    n_paths: int = 10000
    points: List[Union[float, complex]] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    checkpoints: List[float] = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5])
    swallow_eps: float = 1e-6
    stop_level: float = 0.05
    level_cutoff: int = 4
    workers: int = 1
    block_size: int = 1000
    clip_quantile: Optional[float] = None
    format: str = "json"
    out: Optional[str] = None
    t: Optional[float] = None

    @classmethod
    def resolve(
        cls,
        command: str,
        overrides: Optional[Dict[str, Any]] = None,
        config_path: Optional[str] = None,
    ) -> "RunConfig":
        """
        合并配置来源：命令行参数 > 配置文件 > 环境变量默认值

        Args:
            command: 子命令名
            overrides: 命令行给出的参数（值为 None 表示未给出）
            config_path: 可选的配置文件路径

        Returns:
            解析后的 RunConfig（尚未校验）
        """
        raw = Config.get_run_defaults()
        if config_path:
            file_values = load_config_file(config_path)
            unknown = set(file_values) - set(raw)
            if unknown:
                raise ConfigError("--config", f"unknown keys {sorted(unknown)}")
            raw.update(file_values)
        for key, value in (overrides or {}).items():
            if value is not None:
                raw[key] = value
        return cls.from_raw(command, raw)

    @classmethod
    def from_raw(cls, command: str, raw: Dict[str, Any]) -> "RunConfig":
        def _int(key: str) -> int:
            try:
                return int(raw[key])
            except (TypeError, ValueError):
                raise ConfigError(f"--{key.replace('_', '-')}", f"expected an integer, got {raw[key]!r}")

        def _float(key: str) -> float:
            return float(parse_number(raw[key], f"--{key.replace('_', '-')}"))

        clip = raw.get("clip_quantile")
        t_value = raw.get("t")
        return cls(
            command=command,
            delta=parse_rational(raw["delta"], "--delta"),
            kappa=parse_number(raw["kappa"], "--kappa"),
            kappa_hat=parse_number(raw["kappa_hat"], "--kappa-hat"),
            dt=_float("dt"),
            t_max=_float("t_max"),
            seed=_int("seed"),
            n_paths=_int("n_paths"),
            points=parse_points(raw["points"] or DEFAULT_POINTS.get(command, REAL_POINTS)),
            checkpoints=parse_floats(raw["checkpoints"], "--checkpoints"),
            swallow_eps=_float("swallow_eps"),
            stop_level=_float("stop_level"),
            level_cutoff=_int("level_cutoff"),
            workers=_int("workers"),
            block_size=_int("block_size"),
            clip_quantile=None if clip in (None, "") else float(parse_number(clip, "--clip-quantile")),
            format=str(raw["format"]).lower(),
            out=raw.get("out") or None,
            t=None if t_value in (None, "") else float(parse_number(t_value, "--t")),
        )

    @property
    def horizon(self) -> float:
        """module-mc 的终止时刻，未给出时取 t_max"""
        return self.t if self.t is not None else self.t_max

    def validate(self) -> None:
        """
        校验配置

        Raises:
            ConfigError: 任一参数不合法（携带出错的参数名）
        """
        if self.command not in COMMANDS:
            raise ConfigError("command", f"unknown command {self.command!r}")
        if self.command in ("nullvector", "link", "module-mc") and 2 * self.delta + 1 == 0:
            raise ConfigError("--delta", "gamma pole at Δ=-1/2: 2Δ+1 must be nonzero")
        if self.format not in FORMATS:
            raise ConfigError("--format", f"format must be one of {FORMATS}, got {self.format!r}")
        if self.command == "link" and not self.kappa > 0:
            raise ConfigError("--kappa", f"kappa must be positive, got {self.kappa}")
        if self.command not in STOCHASTIC_COMMANDS:
            return

        if not self.kappa > 0:
            raise ConfigError("--kappa", f"kappa must be positive, got {self.kappa}")
        if not self.dt > 0:
            raise ConfigError("--dt", f"dt must be positive, got {self.dt}")
        if not self.t_max > 0 or self.dt > self.t_max:
            raise ConfigError("--t-max", f"t_max must be positive and at least dt, got {self.t_max}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("--seed", f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_paths < 1:
            raise ConfigError("--n-paths", f"n_paths must be positive, got {self.n_paths}")
        if self.command == "martingale" and self.n_paths < 100:
            raise ConfigError("--n-paths", f"martingale needs at least 100 paths, got {self.n_paths}")
        if any(b < a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ConfigError("--checkpoints", f"checkpoints must be sorted, got {self.checkpoints}")
        if self.checkpoints and (self.checkpoints[0] < 0 or self.checkpoints[-1] > self.t_max):
            raise ConfigError("--checkpoints", f"checkpoints must lie within [0, {self.t_max}]")
        if self.command == "martingale":
            if self.checkpoints and self.checkpoints[0] != 0:
                raise ConfigError("--checkpoints", "martingale checkpoints must start at 0")
            if any(isinstance(p, complex) or p <= 0 for p in self.points):
                raise ConfigError("--points", "martingale seeds must be positive reals")
            if not 0 <= self.stop_level < min(self.points):
                raise ConfigError("--stop-level", f"stop_level must lie in [0, {min(self.points)}), got {self.stop_level}")
        if not self.swallow_eps > 0:
            raise ConfigError("--swallow-eps", f"swallow_eps must be positive, got {self.swallow_eps}")
        if self.level_cutoff < 2:
            raise ConfigError("--level-cutoff", f"level_cutoff must be at least 2, got {self.level_cutoff}")
        if self.workers < 1:
            raise ConfigError("--workers", f"workers must be positive, got {self.workers}")
        if self.block_size < 1:
            raise ConfigError("--block-size", f"block_size must be positive, got {self.block_size}")
        if self.clip_quantile is not None and not 0 < self.clip_quantile <= 1:
            raise ConfigError("--clip-quantile", f"clip_quantile must lie in (0, 1], got {self.clip_quantile}")
        if self.t is not None and not 0 <= self.t <= self.t_max:
            raise ConfigError("--t", f"t must lie within [0, {self.t_max}], got {self.t}")

    def to_dict(self) -> Dict[str, Any]:
        """可 JSON 序列化的完整配置（写入每个输出文件的头部）"""
        return {
            "command": self.command,
            "delta": str(self.delta),
            "kappa": str(self.kappa),
            "kappa_hat": str(self.kappa_hat),
            "dt": self.dt,
            "t_max": self.t_max,
            "seed": self.seed,
            "n_paths": self.n_paths,
            "points": [format_point(p) for p in self.points],
            "checkpoints": list(self.checkpoints),
            "swallow_eps": self.swallow_eps,
            "stop_level": self.stop_level,
            "level_cutoff": self.level_cutoff,
            "workers": self.workers,
            "block_size": self.block_size,
            "clip_quantile": self.clip_quantile,
            "format": self.format,
            "out": self.out,
            "t": self.horizon,
        }
