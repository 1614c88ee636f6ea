"""Command-line entry point: simulate, fit, select, recover, backtest, mc

Each command reads one JSON config (sections data, simulate, fista, adam,
select, backtest, mc, logging), applies the flag overrides and writes its
results to --out. Every JSON output embeds the fully resolved config.
"""
import argparse
import json
import os
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .core.design import ReturnPanel
from .core.engine import BekkEngine
from .core.models import (
    AdamConfig, BacktestConfig, CoefStack, DataConfig, DgpSpec, FistaConfig, LoggingConfig, McConfig, SelectConfig
)
from .core.simulation import experiment_rng, gen_bekk_params, replication_rng, simulate_series, theta_from_bekk
from .errors import ConfigError, EstimationFailed, NumericFailure, Vech2BekkError
from .utils.config_utils import JsonFileConfig
from .utils.logging_utils import BasicMonitorLogger, IMonitorLogger, LogLevel
from .utils.parallel_utils import make_pool
from .utils.serialization_utils import to_builtin

COMMANDS = {
    'simulate': 'draw a sparse BEKK model and a return panel from it',
    'fit': 'penalised vech fit at fixed p, lambda and tau',
    'select': 'tune lambda and tau, choose p and K, recover the BEKK components',
    'recover': 'recover BEKK components from a saved coefficient stack',
    'backtest': 'expanding-window minimum-variance backtest',
    'mc': 'Monte Carlo replications over a grid of sample sizes',
}


class RunContext(object):
    """Resolved config records plus the engine built from them"""
    __slots__ = 'config', 'data', 'spec_values', 'fista', 'adam', 'select', 'backtest', 'mc', 'out', 'logger', 'engine'

    def __init__(self, args: argparse.Namespace, logger: Optional[IMonitorLogger] = None) -> None:
        self.config: JsonFileConfig = JsonFileConfig(args.config)
        self.data: DataConfig = DataConfig.from_dict(self.config.section('data'), threads=args.threads,
                                                     center=True if args.center else None)
        self.spec_values: Dict[str, Any] = self.config.section('simulate')
        if args.seed is not None:
            self.spec_values['seed'] = args.seed
        self.fista: FistaConfig = FistaConfig.from_dict(self.config.section('fista'))
        self.adam: AdamConfig = AdamConfig.from_dict(self.config.section('adam'))
        self.select: SelectConfig = SelectConfig.from_dict(self.config.section('select'))
        self.backtest: BacktestConfig = BacktestConfig.from_dict(self.config.section('backtest'))
        self.mc: McConfig = McConfig.from_dict(self.config.section('mc'))
        log_cfg = LoggingConfig.from_dict(self.config.section('logging'))
        self.out: str = args.out
        self.logger: IMonitorLogger = logger or BasicMonitorLogger(
            'vech2bekk', log_cfg.path, stream_log_level=LogLevel.from_name(log_cfg.level))
        self.engine: BekkEngine = BekkEngine(self.fista, self.select, self.adam, make_pool(self.data.threads),
                                             self.logger)

    def spec(self) -> DgpSpec:
        return DgpSpec.from_dict(self.spec_values)

    def resolved(self, *sections: str) -> Dict[str, Any]:
        records = {
            'data': self.data, 'fista': self.fista, 'adam': self.adam, 'select': self.select,
            'backtest': self.backtest, 'mc': self.mc,
        }
        out = {name: records[name].as_dict() for name in sections if name in records}
        if 'simulate' in sections:
            out['simulate'] = self.spec().as_dict()
        return out

    def panel(self) -> ReturnPanel:
        if self.data.panel is None:
            raise ConfigError('No input panel: set "panel" in the data section', stage='config')
        panel = ReturnPanel.from_csv(self.data.panel)
        return panel.centered() if self.data.center else panel

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)


def write_json(path: str, document: Dict[str, Any]) -> None:
    try:
        with open(path, 'w', encoding='utf8') as out_file:
            json.dump(to_builtin(document), out_file, indent=2, sort_keys=True)
            out_file.write('\n')
    except OSError as e:
        raise ConfigError(f'Cannot write {path}', stage='io', exception=e)


def guarded_write(writer: Callable[[str], None], path: str) -> None:
    try:
        writer(path)
    except OSError as e:
        raise ConfigError(f'Cannot write {path}', stage='io', exception=e)


def cmd_simulate(ctx: RunContext) -> List[str]:
    spec = ctx.spec()
    params = gen_bekk_params(spec, experiment_rng(spec.seed))
    rng = replication_rng(spec.seed, 0, 0)
    panel = simulate_series(params, ctx.data.t, spec.burn_in, spec.innovation, rng, spec.df)
    panel_path, params_path, theta_path = ctx.path('panel.csv'), ctx.path('params.json'), ctx.path('theta_true.csv')
    guarded_write(panel.to_csv, panel_path)
    guarded_write(theta_from_bekk(params).to_csv, theta_path)
    write_json(params_path, {'params': params.as_dict(), 'panel': panel.as_dict(),
                             'config': ctx.resolved('data', 'simulate')})
    return [panel_path, params_path, theta_path]


def cmd_fit(ctx: RunContext) -> List[str]:
    data = ctx.data
    report = ctx.engine.fit(ctx.panel(), data.p, data.lam, data.tau)
    return _write_fit(ctx, 'fit', report.as_dict(), report.theta, ('data', 'fista'))


def cmd_select(ctx: RunContext) -> List[str]:
    report = ctx.engine.select(ctx.panel(), ctx.data.loss)
    return _write_fit(ctx, 'select', report.as_dict(), report.theta, ('data', 'fista', 'adam', 'select'))


def _write_fit(ctx: RunContext, name: str, document: Dict[str, Any], theta: CoefStack, sections) -> List[str]:
    json_path, theta_path = ctx.path(f'{name}.json'), ctx.path(f'{name}_theta.csv')
    guarded_write(theta.to_csv, theta_path)
    document['theta_csv'] = os.path.basename(theta_path)
    document['config'] = ctx.resolved(*sections)
    write_json(json_path, document)
    return [json_path, theta_path]


def cmd_recover(ctx: RunContext) -> List[str]:
    data = ctx.data
    if data.theta is None:
        raise ConfigError('No coefficient stack: set "theta" in the data section', stage='config')
    theta = CoefStack.from_csv(data.theta)
    result = ctx.engine.recover(theta, data.k, data.loss, data.t)
    path = ctx.path('recover.json')
    document = result.as_dict()
    document['config'] = ctx.resolved('data', 'adam', 'select')
    write_json(path, document)
    return [path]


def cmd_backtest(ctx: RunContext) -> List[str]:
    report = ctx.engine.backtest(ctx.panel(), ctx.backtest)
    json_path, csv_path = ctx.path('backtest.json'), ctx.path('backtest.csv')
    guarded_write(report.to_csv, csv_path)
    document = report.as_dict()
    document['config'] = ctx.resolved('data', 'backtest', 'fista', 'adam', 'select')
    write_json(json_path, document)
    return [json_path, csv_path]


def cmd_mc(ctx: RunContext) -> List[str]:
    result = ctx.engine.monte_carlo(ctx.spec(), ctx.mc)
    json_path, csv_path = ctx.path('mc.json'), ctx.path('mc.csv')
    guarded_write(result.to_csv, csv_path)
    document = result.as_dict()
    document['config'] = ctx.resolved('simulate', 'mc', 'fista', 'adam', 'select')
    write_json(json_path, document)
    return [json_path, csv_path]


HANDLERS: Dict[str, Callable[[RunContext], List[str]]] = {
    'simulate': cmd_simulate,
    'fit': cmd_fit,
    'select': cmd_select,
    'recover': cmd_recover,
    'backtest': cmd_backtest,
    'mc': cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='vech2bekk', description='Robust sparse BEKK-ARCH estimation')
    commands = parser.add_subparsers(dest='command', required=True)
    for name, description in COMMANDS.items():
        sub = commands.add_parser(name, help=description)
        sub.add_argument('--config', type=str, default=None, help='JSON run config')
        sub.add_argument('--seed', type=int, default=None, help='overrides simulate.seed')
        sub.add_argument('--threads', type=int, default=None, help='worker count, -1 for all cores')
        sub.add_argument('--center', action='store_true', help='subtract column means from the panel')
        sub.add_argument('--out', type=str, default='.', help='output directory')
    return parser


def main(argv: Optional[List[str]] = None, logger: Optional[IMonitorLogger] = None) -> int:
    args = build_parser().parse_args(argv)
    ctx: Optional[RunContext] = None
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f'--seed must be non-negative, got {args.seed}', stage='config')
        if not os.path.isdir(args.out):
            raise ConfigError(f'Output directory {args.out} does not exist', stage='config')
        ctx = RunContext(args, logger)
        written = HANDLERS[args.command](ctx)
    except Vech2BekkError as e:
        print(e.to_json() if isinstance(e, EstimationFailed) else str(e), file=sys.stderr)
        return e.exit_code
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as e:
        failure = NumericFailure(f'{args.command} stopped on {type(e).__name__}', stage=args.command, exception=e)
        active = ctx.logger if ctx is not None else logger
        if active is not None:
            active.log(LogLevel.ERROR, failure.to_json(), exc_info=e)
        print(failure.to_json(), file=sys.stderr)
        return failure.exit_code
    for path in written:
        ctx.logger.log(LogLevel.INFO, f'Wrote {path}')
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
