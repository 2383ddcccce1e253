# Copyright (C) 2026 The python-daehlib developers
#
# This file is part of python-daehlib.
#
# It is subject to the license terms in the LICENSE file found in the top-level
# directory of this distribution.
#
# No part of python-daehlib, including this file, may be copied, modified,
# propagated, or distributed except according to the terms contained in the
# LICENSE file.

"""Command-line front end

Every analysis is a subcommand. The report is JSON on stdout, or in the
--out file with CSV exports written beside it:

    daeh degree --builtin example-4-6
    daeh branch --builtin reactor --lambda-max 1 --out reactor.json
    daeh reproduce example-3-7

Exit codes: 0 on success, 2 when a precondition or the usage is wrong, 1
when a numerical procedure failed. Failures still produce a report whose
"error" member is {"kind", "message", "details"}.
"""

from __future__ import absolute_import, division, print_function

import argparse
import copy
import io
import logging
import math
import os
import sys

import numpy as np

import daeh
from daeh.core import DaehError, SingularSystem, UsageError
from daeh.core.manifold import manifold_point
from daeh.core.model import (builtin, moving_constraint_parts, integrate_signal, load_problem,
                             reactor_det, fix_moving_constraint, BUILTIN_ALIASES,
                             BUILTIN_NAMES)
from daeh.core.serialize import dumps, SCHEMA_VERSION
from daeh.continuation import (continue_branch, find_periodic, isolation_check,
                               multiplicity_scan, write_branch_csv)
from daeh.degree import degree, degree_along_homotopy, degree_psi, find_zeros
from daeh.flow import (default_q_guess, integrate, phi_a, time_average_check,
                       write_trajectory_csv)
from daeh.resonance import compare_period_maps, is_T_resonant
from daeh.svd_reduction import (a22_rank_invariance_check, demo_dae, implicit_residual,
                                load_implicit_dae, reduce, trivial_pairs)

log = logging.getLogger(__name__)

REPRODUCIBLE = ('example-3-7', 'example-4-6', 'reactor')

# flag -> parameter it overrides
_TOL_FLAGS = (
    ('tol_constraint', 'CONSTRAINT_TOL'),
    ('tol_newton', 'ZERO_NEWTON_TOL'),
    ('tol_shoot', 'SHOOT_TOL'),
    ('tol_step', 'SHOOT_STEP_TOL'),
    ('tol_res', 'RES_TOL'),
    ('tol_rank', 'RANK_TOL'),
    ('rtol', 'RTOL'),
    ('atol', 'ATOL'),
)

DEGREE_NOTE = ('indices use the standard orientation: det dF = 4 at both nondegenerate '
              'zeros and the winding index at the origin is -1; a total of 0 is not '
              'attained under any single orientation convention')


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message, usage=self.format_usage().strip())


def _floats(text, what):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise UsageError('%s must be comma-separated numbers; got %r' % (what, text))


def parse_box(text):
    """'lo,hi;lo,hi;...' -> ((lo, hi), ...)"""
    box = []
    for part in text.split(';'):
        bounds = _floats(part, '--box interval')
        if len(bounds) != 2:
            raise UsageError('--box intervals need lo,hi; got %r' % part)
        lo, hi = bounds
        if not lo < hi:
            raise UsageError('--box interval [%g, %g] is empty' % (lo, hi))
        box.append((lo, hi))
    return tuple(box)


def parse_overrides(items):
    """['name=value', ...] -> {name: float}"""
    out = {}
    for item in items or ():
        if '=' not in item:
            raise UsageError('--param needs name=value; got %r' % item)
        name, value = item.split('=', 1)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError('--param %s: %r is not a number' % (name.strip(), value))
    return out


def _add_common(p):
    p.add_argument('--problem', metavar='PATH', help='problem file')
    p.add_argument('--builtin', metavar='NAME',
                   help='built-in problem: %s (aliases %s)'
                        % (', '.join(BUILTIN_NAMES), ', '.join(sorted(BUILTIN_ALIASES))))
    p.add_argument('--param', action='append', metavar='NAME=VALUE',
                   help='override a [params] value (repeatable)')
    p.add_argument('--box', metavar='LO,HI;...', help='search box, one interval per variable')
    p.add_argument('--grid', type=int, metavar='N', help='multistart seeds per dimension')
    p.add_argument('--seed', type=int, help='shuffle seed for multistart shooting')
    p.add_argument('--out', metavar='PATH', help='report file; CSVs are written beside it')
    p.add_argument('--params', choices=('default', 'fast'), default='default',
                   help='numerical parameter set')
    p.add_argument('--tol-constraint', type=float, dest='tol_constraint')
    p.add_argument('--tol-newton', type=float, dest='tol_newton')
    p.add_argument('--tol-shoot', type=float, dest='tol_shoot')
    p.add_argument('--tol-step', type=float, dest='tol_step',
                   help='largest Newton step at an accepted periodic orbit')
    p.add_argument('--tol-res', type=float, dest='tol_res')
    p.add_argument('--tol-rank', type=float, dest='tol_rank')
    p.add_argument('--rtol', type=float)
    p.add_argument('--atol', type=float)
    p.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    p.add_argument('-q', '--quiet', action='store_true', help='warnings only')


def build_parser():
    parser = _ArgumentParser(prog='daeh',
                             description='Periodic perturbations of semi-explicit DAEs')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        return p

    p = command('integrate', 'integrate from a point of the constraint manifold')
    p.add_argument('--lambda', type=float, default=0.0, dest='lam')
    p.add_argument('--x0', required=True, metavar='X,...')
    p.add_argument('--q-guess', dest='q_guess', metavar='Y,...')
    p.add_argument('--t0', type=float, default=0.0)
    p.add_argument('--t1', type=float, help='end time (default T)')
    p.add_argument('--samples', type=int)

    p = command('phi-a', 'the integral of a over [0, t]')
    p.add_argument('--t', type=float, help='end time (default T)')

    command('zeros', 'zeros of F in the box')
    command('degree', 'degree of F and of Psi on the box')
    command('resonance', 'T-resonance of every zero in the box')

    p = command('periodic', 'a T-periodic solution by shooting')
    p.add_argument('--lambda', type=float, default=0.0, dest='lam')
    p.add_argument('--x0', required=True, metavar='X,...', help='initial guess of x(0)')

    p = command('branch', 'continue the branch of periodic pairs from a zero')
    p.add_argument('--lambda-max', type=float, default=1.0, dest='lambda_max')
    p.add_argument('--zero', type=int, default=0, help='position in the zero list')
    p.add_argument('--ds', type=float, help='initial arclength step')

    p = command('multiplicity', 'distinct periodic orbits for small lambda')
    p.add_argument('--lambda', type=float, default=0.1, dest='lam')

    p = command('reduce-svd', 'semi-explicit form of an implicit linear DAE')
    p.add_argument('--matrices', metavar='PATH', help='implicit DAE file (default: demo)')
    p.add_argument('--lambda', type=float, default=0.1, dest='lam')
    p.add_argument('--trials', type=int, default=5, help='SVD re-mixings for the rank check')
    p.add_argument('--samples', type=int, default=257)

    p = command('reproduce', 'rerun one of the worked examples')
    p.add_argument('example', choices=REPRODUCIBLE + ('moving-constraint', 'three-zeros'))
    p.add_argument('--lambda', type=float, default=0.1, dest='lam')
    p.add_argument('--lambda-max', type=float, default=1.0, dest='lambda_max')
    return parser


def build_params(args):
    """Parameter set of the run: --params with the tolerance flags applied"""
    base = daeh.FastParams() if args.params == 'fast' else daeh.DefaultParams()
    params = copy.copy(base)
    for flag, name in _TOL_FLAGS:
        value = getattr(args, flag, None)
        if value is None:
            continue
        if not value > 0:
            raise UsageError('--%s must be positive; got %g' % (flag.replace('_', '-'), value))
        setattr(params, name, value)
    return params


def params_dict(params):
    return dict((name, getattr(params, name)) for name in sorted(dir(params))
                if name.isupper())


def effective_config(args, params):
    skip = ('verbose', 'quiet')
    config = dict((k, v) for k, v in sorted(vars(args).items()) if k not in skip)
    config['params'] = params_dict(params)
    return config


def load(args, params):
    if args.problem and args.builtin:
        raise UsageError('give either --problem or --builtin, not both')
    overrides = parse_overrides(args.param)
    if args.problem:
        return load_problem(args.problem, overrides=overrides, params=params)
    if args.builtin:
        return builtin(args.builtin, overrides=overrides, params=params)
    raise UsageError('one of --problem or --builtin is required')


def _box(args):
    return parse_box(args.box) if args.box else None


def _csv_path(args, suffix):
    if not args.out:
        return None
    return os.path.splitext(args.out)[0] + suffix


def _write_csv(args, suffix, writer, obj):
    path = _csv_path(args, suffix)
    if path is None:
        return None
    with io.open(path, 'w', encoding='utf-8', newline='') as fd:
        writer(fd, obj)
    return path


def _zeros_first_origin(zeros):
    return sorted(zeros, key=lambda z: (round(float(np.linalg.norm(z.z.z)), 9),
                                        tuple(z.z.z)))


# Subcommands

def cmd_integrate(args, params):
    prob = load(args, params)
    x0 = _floats(args.x0, '--x0')
    if len(x0) != prob.k:
        raise UsageError('--x0 needs %d values; got %d' % (prob.k, len(x0)))
    q = _floats(args.q_guess, '--q-guess') if args.q_guess else default_q_guess(prob)
    start = manifold_point(prob, x0, q, params=params)
    t1 = prob.T if args.t1 is None else args.t1
    traj = integrate(prob, args.lam, start, args.t0, t1, samples=args.samples,
                     params=params)
    return {'trajectory': traj,
            'csv': _write_csv(args, '.trajectory.csv', write_trajectory_csv, traj)}


def cmd_phi_a(args, params):
    prob = load(args, params)
    t = prob.T if args.t is None else args.t
    return {'t': t,
            'phi_a': phi_a(prob, t, params=params),
            'a_mean': prob.a_mean,
            'T': prob.T}


def cmd_zeros(args, params):
    prob = load(args, params)
    zeros = find_zeros(prob, _box(args), grid_per_dim=args.grid, params=params)
    return {'zeros': zeros}


def cmd_degree(args, params):
    prob = load(args, params)
    report = degree(prob, _box(args), grid_per_dim=args.grid, params=params)
    return {'degree': report,
            'degree_psi': degree_psi(prob, report.box, zeros=report.zeros, params=params)}


def _resonance_entries(prob, zeros, params):
    entries = []
    for zero in zeros:
        rep = is_T_resonant(prob, zero, params=params)
        entry = {'resonance': rep}
        if not rep.resonant and abs(prob.a_mean - 1.0) <= params.MEAN_ONE_TOL:
            entry['period_map'] = compare_period_maps(prob, zero, params=params)
        entries.append(entry)
    return entries


def cmd_resonance(args, params):
    prob = load(args, params)
    zeros = find_zeros(prob, _box(args), grid_per_dim=args.grid, params=params)
    return {'zeros': _resonance_entries(prob, zeros, params)}


def cmd_periodic(args, params):
    prob = load(args, params)
    x0 = _floats(args.x0, '--x0')
    if len(x0) != prob.k:
        raise UsageError('--x0 needs %d values; got %d' % (prob.k, len(x0)))
    orbit = find_periodic(prob, args.lam, x0, params=params)
    return {'orbit': orbit,
            'csv': _write_csv(args, '.trajectory.csv', write_trajectory_csv, orbit.orbit)}


def cmd_branch(args, params):
    prob = load(args, params)
    zeros = find_zeros(prob, _box(args), grid_per_dim=args.grid, params=params)
    if not 0 <= args.zero < len(zeros):
        raise UsageError('--zero %d is out of range; %d zeros found' % (args.zero, len(zeros)))
    branch = continue_branch(prob, zeros[args.zero], args.lambda_max, ds0=args.ds,
                             zeros=zeros, params=params)
    return {'zeros': zeros,
            'branch': branch,
            'csv': _write_csv(args, '.branch.csv', write_branch_csv, branch)}


def cmd_multiplicity(args, params):
    prob = load(args, params)
    box = _box(args)
    zeros = find_zeros(prob, box, grid_per_dim=args.grid, params=params)
    nonresonant = [z for z in zeros if not is_T_resonant(prob, z, params=params).resonant]
    result = multiplicity_scan(prob, args.lam, nonresonant, box=box, seed=args.seed,
                               params=params)
    return {'zeros': zeros, 'nonresonant': len(nonresonant), 'multiplicity': result,
            'periodic_orbits_found': len(result.orbits)}


def cmd_reduce_svd(args, params):
    if args.matrices:
        dae = load_implicit_dae(args.matrices, params=params)
    else:
        dae = demo_dae(seed=7 if args.seed is None else args.seed, params=params)
    reduction = reduce(dae, params=params)
    ranks = a22_rank_invariance_check(dae, trials=args.trials,
                                      seed=0 if args.seed is None else args.seed,
                                      params=params)
    prob = reduction.reduced
    # F is linear here; two seeds per dimension suffice
    zeros = find_zeros(prob, _box(args), grid_per_dim=args.grid or 2, params=params)
    pairs = [{'p': p, 'max_abs_Ap': r} for p, r in trivial_pairs(reduction, zeros)]
    start = manifold_point(prob, 0.1 * np.ones(prob.k), np.zeros(prob.s), params=params)
    traj = integrate(prob, args.lam, start, 0.0, prob.T, samples=args.samples, params=params)
    return {'reduction': reduction,
            'a22_rank': ranks,
            'trivial_pairs': pairs,
            'implicit_residual': implicit_residual(dae, reduction, traj),
            'csv': _write_csv(args, '.trajectory.csv', write_trajectory_csv, traj)}


def reproduce_moving_constraint(args, params):
    b, raw = moving_constraint_parts()
    prob = fix_moving_constraint(b, raw, params=params)
    report = degree(prob, grid_per_dim=args.grid, params=params)
    origin = report.zeros[0] if report.zeros else None
    return {'problem': prob,
            'integral_a_over_b': integrate_signal(raw.a / b, 0.0, raw.T, params.QUAD_TOL),
            'expected_integral': 2.0 * math.log(3.0),
            'phi_a_T': phi_a(prob, prob.T, params=params),
            'zeros': report.zeros,
            'degree': report.total_degree,
            'degree_psi': degree_psi(prob, report.box, zeros=report.zeros, params=params),
            'boundary_min': report.boundary_min_norm,
            'stable': report.stable,
            'resonant': (is_T_resonant(prob, origin, params=params).resonant
                         if origin is not None else None)}


def reproduce_three_zeros(args, params):
    prob = builtin('example-4-6', params=params)
    report = degree(prob, grid_per_dim=args.grid, params=params)
    zeros = _zeros_first_origin(report.zeros)
    entries = _resonance_entries(prob, zeros, params)
    nonresonant = [z for z, e in zip(zeros, entries) if not e['resonance'].resonant]
    family = lambda rho: builtin('example-4-6-homotopy', overrides={'rho': rho},
                                 params=params)
    steps, consistent = degree_along_homotopy(family, report.box, (0.0, 0.75, 1.0),
                                              params=params, grid_per_dim=args.grid)
    result = multiplicity_scan(prob, args.lam, nonresonant, box=report.box, seed=args.seed,
                               params=params)
    return {'problem': prob,
            'zeros': zeros,
            'indices': [z.index for z in zeros],
            'total_degree': report.total_degree,
            'reference_total_degree': 0,
            'note': DEGREE_NOTE,
            'degree_psi': degree_psi(prob, report.box, zeros=zeros, params=params),
            'resonance': entries,
            'homotopy': {'steps': steps, 'consistent': consistent},
            'multiplicity': result,
            'periodic_orbits_found': len(result.orbits)}


def reproduce_reactor(args, params):
    prob = builtin('reactor', params=params)
    report = degree(prob, grid_per_dim=args.grid or 8, params=params,
                    stability=False)
    if len(report.zeros) != 1:
        log.warning('expected a single zero; found %d', len(report.zeros))
    zero = report.zeros[0]
    rep = is_T_resonant(prob, zero, params=params)
    branch = continue_branch(prob, zero, args.lambda_max, zeros=report.zeros, params=params)
    closed = reactor_det(prob, zero)
    return {'problem': prob,
            'zeros': report.zeros,
            'total_degree': report.total_degree,
            'resonant': rep.resonant,
            'resonance': rep,
            'det_closed_form': closed,
            'det_identity_residual': abs(closed - rep.det_jac) / (1.0 + abs(closed)),
            'period_map': compare_period_maps(prob, zero, params=params),
            'isolation': isolation_check(prob, zero, params=params),
            'time_average_residual': time_average_check(prob, zero.z.p + 0.1,
                                                        params=params),
            'branch': branch,
            'termination': branch.termination,
            'csv': _write_csv(args, '.branch.csv', write_branch_csv, branch)}


_REPRODUCERS = {
    'example-3-7': reproduce_moving_constraint,
    'example-4-6': reproduce_three_zeros,
    'reactor': reproduce_reactor,
}


def cmd_reproduce(args, params):
    return _REPRODUCERS[BUILTIN_ALIASES.get(args.example, args.example)](args, params)


COMMANDS = {
    'integrate': cmd_integrate,
    'phi-a': cmd_phi_a,
    'zeros': cmd_zeros,
    'degree': cmd_degree,
    'resonance': cmd_resonance,
    'periodic': cmd_periodic,
    'branch': cmd_branch,
    'multiplicity': cmd_multiplicity,
    'reduce-svd': cmd_reduce_svd,
    'reproduce': cmd_reproduce,
}


def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger('daeh')
    root.handlers = [handler]
    root.setLevel(level)
    root.propagate = False


def _emit(text, out):
    if out:
        with io.open(out, 'w', encoding='utf-8') as fd:
            fd.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None):
    """Run one subcommand; returns the exit code"""
    argv = sys.argv[1:] if argv is None else list(argv)
    report = {'schema': SCHEMA_VERSION, 'command': None, 'config': None}
    out = None
    code = 0
    try:
        args = build_parser().parse_args(argv)
        out = args.out
        setup_logging(args.verbose, args.quiet)
        report['command'] = args.command
        params = build_params(args)
        report['config'] = effective_config(args, params)
        report['result'] = COMMANDS[args.command](args, params)
    except np.linalg.LinAlgError as err:
        # LinAlgError is a ValueError but not a usage problem
        err = SingularSystem(str(err), source=type(err).__name__)
        log.error('%s: %s', err.kind, err)
        report['error'] = err
        code = err.EXIT_CODE
    except ValueError as err:
        err = UsageError(str(err))
        report['error'] = err
        code = err.EXIT_CODE
    except DaehError as err:
        log.error('%s: %s', err.kind, err)
        report['error'] = err
        code = err.EXIT_CODE
    _emit(dumps(report) + '\n', out)
    return code


def main():
    sys.exit(run())


__all__ = (
    'REPRODUCIBLE',
    'parse_box',
    'parse_overrides',
    'build_parser',
    'build_params',
    'effective_config',
    'run',
    'main',
)
