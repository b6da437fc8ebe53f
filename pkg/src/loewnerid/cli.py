"""Command-line interface: ``loewnerid identify | compare | bench``.

Exit codes are 0 on success, 2 for configuration errors and 3 for numerical
failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from loewnerid.exceptions import ConfigError, LoewnerIdError
from loewnerid.greedy import greedy_loop
from loewnerid.measurement import Oracle, PlantSimulator, save_model
from loewnerid.report import (Experiment, ExperimentConfig, h2_grid_error, max_grid_error,
                              run_experiment)
from loewnerid.timedomain import greedy_time_loop

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

#: plants run by ``bench``; the equidistant scheme always gets the adaptive count
BENCHMARKS = {
    'penzl': dict(plant='penzl', wmin=1e-1, wmax=1e3),
    'random-10': dict(plant='random:10:0', wmin=1e-1, wmax=1e3),
    'time12': dict(plant='time12', domain='time', wmin=1e-2, wmax=1e3, K=16384),
}


def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument('--plant', help='benchmark id: penzl, time12 or random:<order>:<seed>')
    src.add_argument('--model-file', help='JSON model file')
    p.add_argument('--domain', choices=('freq', 'time'), default='freq')
    p.add_argument('--wmin', type=float, default=1e-1)
    p.add_argument('--wmax', type=float, default=1e3)
    p.add_argument('--grid', type=int, default=500, help='number of grid frequencies')
    p.add_argument('--beta', type=float, default=0.6)
    p.add_argument('--epsilon', type=float, default=1e-15)
    p.add_argument('--tol', type=float, default=1e-8)
    p.add_argument('--init-points', type=int, default=6)
    p.add_argument('--max-points', type=int, default=200)
    p.add_argument('--seed', type=int, nargs='+', default=[0])
    p.add_argument('--K', type=int, default=4096, help='samples per time-domain experiment')
    p.add_argument('--sample-time', type=float, help='time-domain sampling time')
    p.add_argument('--out', default='report', help='output directory')
    p.add_argument('-v', '--verbose', action='store_true')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='loewnerid',
                                     description='Greedy Loewner identification of LTI systems.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('identify', help='one adaptive run; writes the model and call log')
    _common(p)
    p.add_argument('--noise', type=float, default=0.0, help='noise standard deviation')

    p = sub.add_parser('compare', help='adaptive vs equidistant over noise levels')
    _common(p)
    p.add_argument('--noise', type=float, nargs='*', default=[],
                   help='noise standard deviations (the noiseless run is always included)')
    p.add_argument('--equi-count', type=int, help='equidistant point count (default: adaptive count)')
    p.add_argument('--workers', type=int, default=1)

    p = sub.add_parser('bench', help='compare on the shipped benchmarks')
    p.add_argument('--only', choices=sorted(BENCHMARKS), nargs='+')
    p.add_argument('--noise', type=float, nargs='*', default=[])
    p.add_argument('--seed', type=int, nargs='+', default=[0])
    p.add_argument('--out', default='bench')
    p.add_argument('-v', '--verbose', action='store_true')
    return parser


def _config(args, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        plant=args.plant, model_file=args.model_file, domain=args.domain, wmin=args.wmin,
        wmax=args.wmax, grid_size=args.grid, beta=args.beta, epsilon=args.epsilon, tol=args.tol,
        init_points=args.init_points, max_points=args.max_points, seeds=tuple(args.seed),
        out_dir=args.out, K=args.K, sample_time=args.sample_time, **extra)


def _identify(args) -> dict:
    cfg = _config(args)
    exp = Experiment(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.domain == 'time':
        source = PlantSimulator(exp.truth, args.noise, cfg.seeds[0])
        model, history = greedy_time_loop(source, exp.greedy_cfg, exp.grid.sample_time, cfg.K)
        budget = {'experiments': source.experiments, 'measurements': 2 * source.experiments}
    else:
        source = Oracle(exp.truth, args.noise, cfg.seeds[0])
        model, history = greedy_loop(source, exp.greedy_cfg)
        source.export_log(out / 'call_log.csv')
        budget = {'measurements': len(source.call_log)}
    save_model(model, out / 'model.json')
    summary = {'plant': exp.name, 'stop_reason': history.stop_reason,
               'n_points': len(history.points), 'iterations': history.iterations,
               'order': model.order, 'errors': history.errors, **budget,
               'h2_error': h2_grid_error(model, exp.truth, exp.grid),
               'max_error': max_grid_error(model, exp.truth, exp.grid)}
    (out / 'summary.json').write_text(json.dumps(summary, indent=2))
    return summary


def _compare(args) -> dict:
    return run_experiment(_config(args, noise_levels=tuple(args.noise),
                                  equi_count=args.equi_count, workers=args.workers))


def _bench(args) -> dict:
    out = {}
    for name in args.only or sorted(BENCHMARKS):
        cfg = replace(ExperimentConfig(**BENCHMARKS[name]), noise_levels=tuple(args.noise),
                      seeds=tuple(args.seed), out_dir=str(Path(args.out) / name))
        out[name] = run_experiment(cfg)
    return out


def _print_summary(command, summary):
    if command == 'identify':
        print(f"{summary['plant']}: {summary['stop_reason']} after {summary['n_points']} points, "
              f"order {summary['order']}, h2 {summary['h2_error']:.3e}, "
              f"max {summary['max_error']:.3e}")
        return
    reports = summary if command == 'bench' else {summary['plant']: summary}
    for name, rep in reports.items():
        for run in rep['runs']:
            h2 = run['h2_error']
            print(f"{name:>12} {run['scheme']:>11} noise={run['noise_std']:<8g} "
                  f"seed={run['seed']} points={run['n_points']:>3} "
                  f"h2={'nan' if h2 is None else f'{h2:.3e}'} {run['status']}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    handler = {'identify': _identify, 'compare': _compare, 'bench': _bench}[args.command]
    try:
        summary = handler(args)
    except ConfigError as exc:
        print(f'config error: {exc}', file=sys.stderr)
        return EXIT_CONFIG
    except (LoewnerIdError, OSError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, LoewnerIdError) else EXIT_CONFIG
    _print_summary(args.command, summary)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
