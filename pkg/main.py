#!/usr/bin/env python3
"""
LogSLE - 对数共形场论中的随机 Löwner 演化
主程序入口文件

在秩二 Jordan 胞 Virasoro 模上构造对数零矢量，把随机游走系数链接到耦合的随机 Löwner 方程，
并用 Monte Carlo 检验相应观测量与截断模期望的守恒性。
"""

import atexit
import importlib
import signal
import sys
from types import ModuleType
from typing import Annotated, Any, Dict, List, Optional, Sequence

import click
import typer
import typer.main
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from src import __version__
from src.configs.config import COMMANDS, Config, ConfigError, RunConfig
from src.utils.safe_logger import configure_logging, safe_log_error, safe_log_info

# 初始化控制台和Typer应用
console = Console()
app = typer.Typer(
    name="LogSLE",
    help="Jordan 胞 Virasoro 模、耦合随机 Löwner 方程与鞅性检验",
    add_completion=False
)


def cleanup_resources():
    """退出时记录日志（工作进程池由 with 语句自行回收）"""
    safe_log_info("程序退出")


atexit.register(cleanup_resources)


def signal_handler(signum, frame):
    """信号处理器"""
    safe_log_error(f"收到信号 {signum}，正在退出")
    cleanup_resources()
    sys.exit(130 if signum == signal.SIGINT else 143)


signal.signal(signal.SIGINT, signal_handler)
signal.signal(signal.SIGTERM, signal_handler)


# 公共参数
DeltaOpt = Annotated[Optional[str], typer.Option("--delta", help="共形权 Δ，精确有理数 p/q")]
KappaOpt = Annotated[Optional[str], typer.Option("--kappa", help="扩散系数 κ（p/q 或实数）")]
KappaHatOpt = Annotated[Optional[str], typer.Option("--kappa-hat", help="κ̂，k(τ) = κ + τκ̂")]
DtOpt = Annotated[Optional[float], typer.Option("--dt", help="时间步长")]
TMaxOpt = Annotated[Optional[float], typer.Option("--t-max", help="模拟时长")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="主随机种子")]
NPathsOpt = Annotated[Optional[int], typer.Option("--n-paths", help="路径数")]
PointsOpt = Annotated[Optional[str], typer.Option("--points", help="种子点，逗号分隔，复数写作 re:im")]
CheckpointsOpt = Annotated[Optional[str], typer.Option("--checkpoints", help="检查点时刻，逗号分隔")]
OutOpt = Annotated[Optional[str], typer.Option("--out", "-o", help="输出文件路径")]
FormatOpt = Annotated[Optional[str], typer.Option("--format", "-f", help="输出格式 csv/json")]
ConfigOpt = Annotated[Optional[str], typer.Option("--config", "-c", help="key = value 配置文件")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="显示详细日志")]
WorkersOpt = Annotated[Optional[int], typer.Option("--workers", help="并行进程数")]
LevelCutoffOpt = Annotated[Optional[int], typer.Option("--level-cutoff", help="模截断级别")]
ClipOpt = Annotated[Optional[float], typer.Option("--clip-quantile", help="|M| 截断分位数")]
StopLevelOpt = Annotated[Optional[float], typer.Option("--stop-level", help="h ≤ 该值时停止路径，0 表示不停止")]


def _print_summary(command: str, summary: Dict[str, Any]) -> None:
    table = Table(title=f"{command} 结果", show_header=True, header_style="bold blue")
    table.add_column("项目")
    table.add_column("值")
    for key, value in summary.items():
        table.add_row(str(key), str(value))
    console.print(table)


def _run(command: str, overrides: Dict[str, Any], config_path: Optional[str], verbose: bool) -> None:
    """解析配置、执行工作流、写出报告；失败时以非零状态退出"""
    logging_config = Config.get_logging_config()
    configure_logging(verbose=verbose, log_file=logging_config["log_file"], level=logging_config["level"])

    try:
        run_config = RunConfig.resolve(command, overrides, config_path)
        run_config.validate()
    except ConfigError as e:
        console.print(f"[red]❌[/red] 参数错误 [bold]{e.flag}[/bold]: {e.message}")
        raise typer.Exit(1)

    if command in ("nullvector", "link"):
        from src.workflows.symbolic_workflow import SymbolicWorkflow
        workflow = SymbolicWorkflow(run_config)
    else:
        from src.workflows.stochastic_workflow import StochasticWorkflow
        workflow = StochasticWorkflow(run_config)

    console.print(f"[blue]🚀[/blue] 执行 {command} ...")
    results = workflow.execute()
    if not results['success']:
        console.print(f"[red]❌[/red] {command} 失败: {results.get('error', '未知错误')}")
        raise typer.Exit(1)

    if run_config.out:
        from src.tools.exporters import emit_report
        try:
            emit_report(results['report'], run_config.format, run_config.out, header=run_config.to_dict())
        except OSError as e:
            console.print(f"[red]❌[/red] 参数错误 [bold]--out[/bold]: 无法写入 {run_config.out}: {e}")
            raise typer.Exit(1)
        console.print(f"[green]✅[/green] 报告已保存到: {run_config.out}")

    _print_summary(command, results['summary'])
    if not results['exit_ok']:
        console.print(f"[red]❌[/red] {command} 检验未通过")
        raise typer.Exit(1)


@app.command()
def nullvector(
    delta: DeltaOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
    verbose: VerboseOpt = False,
):
    """构造并检验二级对数零矢量"""
    _run("nullvector", {"delta": delta, "out": out, "format": format}, config, verbose)


@app.command()
def link(
    delta: DeltaOpt = None,
    kappa: KappaOpt = None,
    kappa_hat: KappaHatOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
    verbose: VerboseOpt = False,
):
    """由 SLE 游走系数计算 μ、ν 及其 τ 展开"""
    overrides = {"delta": delta, "kappa": kappa, "kappa_hat": kappa_hat, "out": out, "format": format}
    _run("link", overrides, config, verbose)


@app.command()
def simulate(
    kappa: KappaOpt = None,
    kappa_hat: KappaHatOpt = None,
    dt: DtOpt = None,
    t_max: TMaxOpt = None,
    seed: SeedOpt = None,
    n_paths: NPathsOpt = None,
    points: PointsOpt = None,
    checkpoints: CheckpointsOpt = None,
    workers: WorkersOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
    verbose: VerboseOpt = False,
):
    """积分耦合 Löwner 方程并导出轨迹"""
    overrides = {
        "kappa": kappa, "kappa_hat": kappa_hat, "dt": dt, "t_max": t_max, "seed": seed,
        "n_paths": n_paths, "points": points, "checkpoints": checkpoints, "workers": workers,
        "out": out, "format": format,
    }
    _run("simulate", overrides, config, verbose)


@app.command()
def martingale(
    delta: DeltaOpt = None,
    kappa: KappaOpt = None,
    kappa_hat: KappaHatOpt = None,
    dt: DtOpt = None,
    t_max: TMaxOpt = None,
    seed: SeedOpt = None,
    n_paths: NPathsOpt = None,
    points: PointsOpt = None,
    checkpoints: CheckpointsOpt = None,
    workers: WorkersOpt = None,
    clip_quantile: ClipOpt = None,
    stop_level: StopLevelOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
    verbose: VerboseOpt = False,
):
    """观测量 M 的 Monte Carlo 漂移检验"""
    overrides = {
        "delta": delta, "kappa": kappa, "kappa_hat": kappa_hat, "dt": dt, "t_max": t_max,
        "seed": seed, "n_paths": n_paths, "points": points, "checkpoints": checkpoints,
        "workers": workers, "clip_quantile": clip_quantile, "stop_level": stop_level,
        "out": out, "format": format,
    }
    _run("martingale", overrides, config, verbose)


@app.command("module-mc")
def module_mc(
    delta: DeltaOpt = None,
    kappa: KappaOpt = None,
    kappa_hat: KappaHatOpt = None,
    dt: DtOpt = None,
    t_max: TMaxOpt = None,
    t: Annotated[Optional[float], typer.Option("--t", help="演化时刻，默认取 t_max")] = None,
    seed: SeedOpt = None,
    n_paths: NPathsOpt = None,
    level_cutoff: LevelCutoffOpt = None,
    workers: WorkersOpt = None,
    out: OutOpt = None,
    format: FormatOpt = None,
    config: ConfigOpt = None,
    verbose: VerboseOpt = False,
):
    """截断模期望 E[G_t|Δ+θ⟩] 的 Monte Carlo 与确定性解对照"""
    overrides = {
        "delta": delta, "kappa": kappa, "kappa_hat": kappa_hat, "dt": dt, "t_max": t_max, "t": t,
        "seed": seed, "n_paths": n_paths, "level_cutoff": level_cutoff, "workers": workers,
        "out": out, "format": format,
    }
    _run("module-mc", overrides, config, verbose)


@app.command()
def version():
    """显示版本信息"""
    console.print(f"[bold blue]LogSLE v{__version__}[/bold blue]")
    console.print("对数共形场论中的随机 Löwner 演化")
    console.print("\n[bold]技术栈:[/bold]")
    console.print("- fractions: 对偶有理数精确计算")
    console.print("- NumPy: 向量化 Euler–Maruyama 与随机数子流")
    console.print("- SciPy: 标准误差与正态尾概率")
    console.print("- Typer + Rich: 命令行界面")


@app.command("config")
def show_config():
    """显示当前默认配置"""
    console.print(Panel.fit(Text("LogSLE 配置信息", style="bold blue"), border_style="blue"))
    for key, value in Config.get_run_defaults().items():
        console.print(f"[green]✓[/green] {key}: {value}")
    logging_config = Config.get_logging_config()
    console.print(f"[green]✓[/green] 日志级别: {logging_config['level']}")
    console.print(f"[green]✓[/green] 日志文件: {logging_config['log_file'] or '(无)'}")
    console.print(f"\n[bold]可用命令:[/bold] {', '.join(COMMANDS)}")


@app.command()
def examples():
    """显示使用示例"""
    console.print("[bold blue]LogSLE 使用示例[/bold blue]")

    console.print("\n[bold]1. 对数零矢量:[/bold]")
    console.print("[green]python main.py nullvector --delta 1/4[/green]")

    console.print("\n[bold]2. 链接映射:[/bold]")
    console.print("[green]python main.py link --kappa 4 --kappa-hat -16/3[/green]")

    console.print("\n[bold]3. 轨迹导出:[/bold]")
    console.print("[green]python main.py simulate --points 0:1,0.5:0.5 --n-paths 10 --out traj.csv --format csv[/green]")

    console.print("\n[bold]4. 鞅性检验:[/bold]")
    console.print("[green]python main.py martingale --delta 1/4 --kappa 4 --kappa-hat -16/3 --seed 7 --n-paths 10000 --out report.json[/green]")

    console.print("\n[bold]5. 截断模对照:[/bold]")
    console.print("[green]python main.py module-mc --delta 1/4 --level-cutoff 4 --t 0.5 --n-paths 10000[/green]")


def _exception_modules(command: Any) -> List[ModuleType]:
    """命令类所属 click 包的 exceptions 模块（typer 可能自带一份 click）"""
    modules = [click.exceptions]
    for klass in type(command).__mro__:
        package, _, leaf = klass.__module__.rpartition(".")
        if leaf != "core" or package in ("", "typer"):
            continue
        try:
            module = importlib.import_module(f"{package}.exceptions")
        except ImportError:
            continue
        if module not in modules:
            modules.append(module)
    return modules


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    解析命令行并执行

    Returns:
        退出状态：0 成功，1 校验或执行失败，2 用法错误
    """
    args: Optional[List[str]] = list(argv) if argv is not None else None
    command = typer.main.get_command(app)
    modules = _exception_modules(command)
    usage_errors = tuple(m.ClickException for m in modules)
    aborts = tuple(m.Abort for m in modules)
    exits = tuple(m.Exit for m in modules)
    try:
        rv = command.main(args=args, standalone_mode=False, prog_name="main.py")
    except usage_errors as e:
        e.show()
        return e.exit_code
    except aborts:
        console.print("[red]已中止[/red]")
        return 1
    except exits as e:
        return e.exit_code
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(parse_and_dispatch(sys.argv[1:]))
