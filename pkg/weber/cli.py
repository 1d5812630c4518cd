"""Command-line interface: solve, compare, certify, oracle and evaluate.

Result documents are printed to stdout (and written to --out when given);
logs go to stderr. Toolkit errors exit with status 2 and a one-line
message on stderr.
"""
import functools
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import click
import numpy as np
import pandas as pd

from weber.config import SOLVER_DEFAULTS, get_logger, preset_params
from weber.exceptions import InvalidParameterError, ParseError, WeberError
from weber.models import VARIANTS, CompareConfig, ProblemInstance, RunConfig, SolverParams
from weber.services import analysis, exporter, harness
from weber.services.gauge import GaugeSet
from weber.services.loaders import load_constraints, load_points
from weber.services.solver import solve

logger = get_logger()

# CLI flag -> SolverParams field
PARAM_FLAGS = {
    'alpha': 'alpha',
    'beta': 'beta',
    'gamma': 'gamma',
    'delta': 'delta',
    'sigma': 'sigma',
    'mu0': 'mu0',
    'muf': 'mu_f',
    'tau0': 'tau0',
    'tauf': 'tau_f',
    'lambda_start': 'lambda_start',
    'lambda_f': 'lambda_f',
    'lambda_skip': 'lambda_skip',
    'n_max': 'N',
    'tol': 'tol',
    'merit': 'merit',
}


def instance_options(func):
    """Flags shared by every subcommand."""
    options = [
        click.option('--data', 'data_path', required=True, type=click.Path(dir_okay=False),
                     help='Demand point file'),
        click.option('--format', 'data_format', type=click.Choice(['csv', 'tsplib']), default='csv',
                     show_default=True),
        click.option('--gauge', type=click.Choice(['l2', 'l1', 'linf']), default='l2', show_default=True),
        click.option('--radius', type=float, default=1.0, show_default=True, help='Radius of the gauge ball'),
        click.option('--k', type=int, default=2, show_default=True, help='Number of centers'),
        click.option('--constraints', 'constraints_path', type=click.Path(dir_okay=False),
                     help='YAML file with per-center region literals and optional params'),
        click.option('--out', type=click.Path(dir_okay=False), help='Write the JSON result here'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def solver_options(func):
    """Hyperparameter flags; unset flags fall back to preset, config file, then defaults."""
    options = [
        click.option('--preset', help='Named parameter preset from presets/experiments.yaml'),
        click.option('--variant', type=click.Choice(list(VARIANTS)), default='abdca', show_default=True),
        click.option('--alpha', type=float),
        click.option('--beta', type=float),
        click.option('--gamma', type=float),
        click.option('--delta', type=float),
        click.option('--sigma', type=float),
        click.option('--mu0', type=float),
        click.option('--muf', type=float),
        click.option('--tau0', type=float),
        click.option('--tauf', type=float),
        click.option('--lambda-start', type=float),
        click.option('--lambda-f', type=float),
        click.option('--lambda-skip', type=int),
        click.option('--n-max', type=int, help='Iteration cap per stage'),
        click.option('--tol', type=float),
        click.option('--merit', type=click.Choice(['true-objective', 'penalized-objective', 'smoothed-objective'])),
        click.option('--seed', type=int, default=0, show_default=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_run_config(kwargs: Dict[str, Any]) -> RunConfig:
    """Merge defaults, preset, constraints-file params and explicit flags."""
    merged = dict(SOLVER_DEFAULTS)
    if kwargs.get('preset'):
        try:
            merged = preset_params(kwargs['preset'])
        except KeyError as e:
            raise InvalidParameterError(str(e.args[0])) from e

    constraints = ()
    if kwargs.get('constraints_path'):
        constraints, file_params = load_constraints(kwargs['constraints_path'])
        merged.update(file_params)

    for flag, name in PARAM_FLAGS.items():
        if kwargs.get(flag) is not None:
            merged[name] = kwargs[flag]

    return RunConfig(
        data_path=kwargs['data_path'],
        data_format=kwargs.get('data_format', 'csv'),
        gauge_kind=kwargs.get('gauge', 'l2'),
        radius=kwargs.get('radius', 1.0),
        k=kwargs.get('k', 2),
        constraints=constraints,
        params=SolverParams.from_mapping(merged),
        variant=kwargs.get('variant') or 'abdca',
        out=kwargs.get('out'),
        trace=kwargs.get('trace'),
    )


def build_instance(cfg: RunConfig) -> ProblemInstance:
    return ProblemInstance(
        A=load_points(cfg.data_path, cfg.data_format),
        k=cfg.k,
        gauge=GaugeSet(cfg.gauge_kind, cfg.radius),
        constraints=cfg.constraints,
        name=Path(cfg.data_path).stem,
    )


def load_centers(path: str, P: ProblemInstance) -> np.ndarray:
    """Centers from a result JSON ('centers' field) or a headerless CSV."""
    if path.endswith('.json'):
        return np.asarray(exporter.load_result(path)['centers'], dtype=float)
    try:
        return pd.read_csv(path, header=None, dtype=float).to_numpy()
    except (ValueError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"Could not read centers: {e}", path=path) from e


def _init_box(kwargs: Dict[str, Any], P: ProblemInstance):
    if not kwargs.get('init_box'):
        return None
    lo, hi = kwargs['init_box']
    return [lo] * P.n, [hi] * P.n


def emit(document: Dict[str, Any], out: Optional[str]):
    if out:
        exporter.write_json(document, out)
    click.echo(exporter.dumps(document))


def handle_errors(func):
    """Turn toolkit errors into a one-line stderr message and exit status 2."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except WeberError as e:
            logger.error("command_failed", command=func.__name__, error=str(e), kind=type(e).__name__)
            click.echo(f"error: {e}", err=True)
            sys.exit(2)
    return wrapper


@click.group()
def cli():
    """Multi-facility Weber problems under gauge distances."""


@cli.command('solve')
@instance_options
@solver_options
@click.option('--x0', 'x0_path', type=click.Path(dir_okay=False), help='Initial centers (JSON result or CSV)')
@click.option('--trace', type=click.Path(dir_okay=False), help='Write the per-iteration trace CSV here')
@click.option('--init-box', nargs=2, type=float, help='Uniform range LO HI for the random start')
@handle_errors
def solve_command(**kwargs):
    """Run one solver variant from a seeded random start."""
    cfg = build_run_config(kwargs)
    P = build_instance(cfg)
    if kwargs.get('x0_path'):
        X0 = load_centers(kwargs['x0_path'], P)
    else:
        X0 = harness.random_init(P, _init_box(kwargs, P), kwargs['seed'], 0)
    report = solve(P, X0, cfg.params, variant=cfg.variant)
    if cfg.trace:
        exporter.write_trace_csv(report.trace, cfg.trace)
    document = exporter.solve_document(P, report, cfg.params.to_dict(), analysis.natural_clustering(P, report.X))
    emit(document, cfg.out)


@cli.command('compare')
@instance_options
@solver_options
@click.option('--runs', type=int, default=100, show_default=True)
@click.option('--variants', default=','.join(VARIANTS), show_default=True, help='Comma-separated variant list')
@click.option('--workers', type=int, default=1, show_default=True)
@click.option('--init-box', nargs=2, type=float, help='Uniform range LO HI for every coordinate')
@click.option('--ratio-csv', type=click.Path(dir_okay=False), help='Write the ratio table here')
@click.option('--sweep-lambda-skip', help='Comma-separated lambda_skip values to sweep')
@handle_errors
def compare_command(**kwargs):
    """Shared-start comparison of the solver variants."""
    cfg = build_run_config(kwargs)
    P = build_instance(cfg)
    variants = tuple(v.strip() for v in kwargs['variants'].split(',') if v.strip())
    compare_cfg = CompareConfig(runs=kwargs['runs'], seed=kwargs['seed'], params=cfg.params,
                                variants=variants, init_box=_init_box(kwargs, P), workers=kwargs['workers'])

    if kwargs.get('sweep_lambda_skip'):
        try:
            values = [int(v) for v in kwargs['sweep_lambda_skip'].split(',')]
        except ValueError as e:
            raise InvalidParameterError(f"Invalid lambda_skip list: {kwargs['sweep_lambda_skip']}") from e
        rows = harness.sweep_lambda_skip(P, compare_cfg, values)
        frame = pd.DataFrame(rows)
        if kwargs.get('ratio_csv'):
            frame.to_csv(kwargs['ratio_csv'], index=False, float_format='%.17g')
        click.echo(frame.to_csv(index=False, float_format='%.17g'), nl=False)
        return

    report = harness.compare(P, compare_cfg)
    if kwargs.get('ratio_csv'):
        exporter.write_ratio_csv(report, P, P.name, kwargs['ratio_csv'])
    emit(exporter.compare_document(P, report, compare_cfg), cfg.out)


@cli.command('certify')
@instance_options
@click.option('--centers', 'centers_path', required=True, type=click.Path(dir_okay=False),
              help='Centers to certify (JSON result or CSV)')
@click.option('--tol', type=float, default=None, help='Relative tolerance')
@handle_errors
def certify_command(**kwargs):
    """Check local optimality of given centers."""
    cfg = build_run_config({**kwargs, 'tol': None})
    P = build_instance(cfg)
    X = load_centers(kwargs['centers_path'], P)
    tol = {'tol': kwargs['tol']} if kwargs.get('tol') is not None else {}
    certificate = analysis.local_certificate(P, X, **tol)
    emit(exporter.certificate_document(P, X, certificate), cfg.out)


@cli.command('oracle')
@instance_options
@click.option('--workers', type=int, default=1, show_default=True)
@handle_errors
def oracle_command(**kwargs):
    """Brute-force global optimum of a small instance."""
    cfg = build_run_config(kwargs)
    P = build_instance(cfg)
    X_star, value = analysis.brute_force_global(P, workers=kwargs['workers'])
    emit(exporter.oracle_document(P, X_star, value), cfg.out)


@cli.command('evaluate')
@instance_options
@click.option('--centers', 'centers_path', required=True, type=click.Path(dir_okay=False))
@click.option('--mu', type=float, default=SOLVER_DEFAULTS['mu_f'], show_default=True)
@click.option('--tau', type=float, default=0.0, show_default=True)
@handle_errors
def evaluate_command(**kwargs):
    """Objective values and natural clustering of given centers."""
    cfg = build_run_config(kwargs)
    P = build_instance(cfg)
    X = load_centers(kwargs['centers_path'], P)
    evaluation = analysis.evaluate(P, X, mu=kwargs['mu'], tau=kwargs['tau'])
    emit(exporter.evaluate_document(P, X, evaluation), cfg.out)


def run_subcommand(argv: Sequence[str]) -> int:
    """Run the CLI in-process and return its exit status."""
    try:
        result = cli.main(args=list(argv), prog_name='weber', standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    # --help and similar early exits come back as an int status
    return result if isinstance(result, int) else 0


def main():
    cli()


if __name__ == '__main__':
    main()
