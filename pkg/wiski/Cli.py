""" Command-line front end.

Subcommands ``stream-regress``, ``stream-classify``, ``bayes-opt``, ``active-learn``, ``bench-timing``
and ``snapshot``. Settings come from flags, then from a flat ``key=value`` file given with ``--config``,
then from defaults. Exit codes: 0 ok, 2 usage or validation, 3 missing file, 4 malformed data.
"""

import os
import sys
import logging
import argparse
import concurrent.futures
import yaml
import numpy as np
import pandas as pd

try: from wiski.Acquisition import *
except ImportError: from Acquisition import *


log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_DATA = 0, 2, 3, 4
METRICS_SCHEMA_VERSION = 1     # bump when a metrics table changes its columns


def ingest_csv(path, target_column=None, standardize=True, split=False, seed=None, test_fraction=0.1, pretrain_fraction=0.05):
    """ Reads a comma-separated file with a header row into features and a target.

    Parameters
    ----------
    path : str
    target_column : str, optional
        Name of the target column; the last column by default.
    standardize : bool
        Min-max scale features to :math:`[-1, 1]` and standardize the target (population sd).
        Only training-split statistics are used when ``split`` is set.
    split : bool
        Return a seeded :class:`DataSplit` (90/10 train/test, 5% of train for pretraining) instead of ``(X, y)``.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray) or DataSplit

    Examples
    --------
    >>> import tempfile
    >>> folder = tempfile.mkdtemp(); path = os.path.join(folder, 'two.csv')
    >>> with open(path, 'w') as f: _ = f.write('x,y\\n0,1\\n10,3\\n')
    >>> X, y = ingest_csv(path); X.ravel().tolist(), y.tolist()
    ([-1.0, 1.0], [-1.0, 1.0])
    >>> X, y = ingest_csv(path, target_column='x', standardize=False); X.ravel().tolist(), y.tolist()
    ([1.0, 3.0], [0.0, 10.0])

    >>> with open(path, 'w') as f: _ = f.write('a,b,y\\n1,2,3\\n4,oops,6\\n')
    >>> try: ingest_csv(path)
    ... except DataError as e: print(e, '|', e.row, e.column)
    non-numeric value 'oops' in row 3, column b | 3 b
    >>> with open(path, 'w') as f: _ = f.write('a,y\\n')
    >>> ingest_csv(path)
    Traceback (most recent call last):
    ...
    wiski.Util.DataError: no data rows in ...two.csv
    >>> ingest_csv(os.path.join(folder, 'absent.csv'))
    Traceback (most recent call last):
    ...
    FileNotFoundError: ...absent.csv...
    """
    if not os.path.isfile(path): raise FileNotFoundError('data file not found: ' + str(path))
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError('cannot parse ' + str(path) + ': ' + str(e).strip())
    if df.shape[1] < 2: raise DataError('need at least one feature and a target column in ' + str(path))
    if len(df) == 0: raise DataError('no data rows in ' + str(path))

    num = df.apply(pd.to_numeric, errors='coerce')
    bad = num.isna().to_numpy()
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        # header is file row 1
        raise DataError('non-numeric value ' + repr(df.iat[i, j]) + ' in row ' + str(i + 2) + ', column ' + str(df.columns[j]),
                        row=i + 2, column=df.columns[j])

    target = df.columns[-1] if target_column is None else target_column
    if target not in num.columns:
        raise InvalidArgument('no column ' + str(target) + ' in ' + str(path) + '; columns are ' + ', '.join(map(str, num.columns)))
    X = num.drop(columns=[target]).to_numpy(dtype=float)
    y = num[target].to_numpy(dtype=float)

    if split: return Datasets.split(X, y, test_fraction, pretrain_fraction, seed, standardize)
    if not standardize: return X, y
    X, _, y, _, _ = Datasets.scale(X, X[:0], y, y[:0])
    return X, y


class RunConfig(FitSpec):
    """ Validated settings of one CLI run.

    Every supplied value goes through ``add_verify`` (or a choice check); missing values take defaults.
    A rejected value leaves a ``<key>_warning``, and the CLI refuses to run while any warning is present.

    Examples
    --------
    >>> cfg = RunConfig('bench-timing', {'n': '500', 'm': 64, 'seed': 3}); cfg.n, cfg.m, cfg.lr_online, cfg.valid()
    (500, 64, 0.005, True)
    >>> cfg = RunConfig('bench-timing', {'epochs': -1, 'kernel': 'cosine'}); sorted(cfg.warnings())
    ['epochs', 'kernel']
    >>> cfg.kernel_warning
    'bad spec kernel=cosine. Must be one of RBF, Matern12. Using default RBF'
    >>> RunConfig('bench-timing', {'colour': 'blue'})
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: unknown configuration key colour
    >>> RunConfig('stream-regress', {'m': 64}).grid_sizes(2)
    8
    """
    # key: (dtype, min, max, default)
    fields = {
        'data': (str, None, None, None), 'target': (str, None, None, None), 'synthetic': (str, None, None, None),
        'load': (str, None, None, None), 'out': (str, None, None, None),
        'n': (int, 10, None, 1000), 'dims': (int, 1, None, 1), 'num_classes': (int, 2, None, None),
        'kernel': (str, None, None, 'RBF'), 'model': (str, None, None, 'wiski'),
        'm': (int, 4, None, 256), 'grid_size': (int, 4, None, None), 'rank': (int, 1, None, None),
        'lr_batch': (float, 0, None, 5e-2), 'lr_online': (float, 0, None, 5e-3), 'epochs': (int, 0, None, 200),
        'steps_per_observation': (int, 0, None, 1), 'eval_every': (int, 1, None, 1),
        'pretrain_fraction': (float, 0, 1, 0.05), 'test_fraction': (float, 0, 1, 0.1),
        'seed': (int, 0, None, None), 'seeds': (int, 1, None, 1),
        'objective': (str, None, None, 'Levy3'), 'iterations': (int, 1, None, None), 'q': (int, 1, None, None),
        'beta': (float, 0, None, 0.2), 'pool_size': (int, 1, None, None), 'strategy': (str, None, None, 'nipv'),
        'checkpoints': (list, None, None, None),
    }
    choices = {
        'kernel': ('RBF', 'Matern12'), 'model': ('wiski', 'exact'), 'strategy': ('nipv', 'random'),
        'synthetic': ('sine', 'linear', 'field', 'blobs', 'banana'),
        'objective': ('Levy3', 'Ackley3', 'sine1d', 'synthetic2dfield'),
    }

    def __init__(self, subcommand, values=None, print_precision=9):
        super().__init__(print_precision=print_precision)
        self.subcommand = subcommand
        values = {} if values is None else dict(values)
        unknown = sorted(set(values) - set(self.fields))
        if unknown: raise InvalidArgument('unknown configuration key ' + ', '.join(unknown))

        for k, (dtype, lo, hi, dflt) in self.fields.items():
            v = self._coerce(dtype, values.get(k))
            if v is None: setattr(self, k, dflt)
            elif k in self.choices: self._verify_choice(k, v, dflt)
            else: self.add_verify(dtype=dtype, min=lo, max=hi, dflt=dflt, **{k: v})

    @staticmethod
    def _coerce(dtype, v):
        if not isinstance(v, str): return v
        if dtype is list:
            parts = [s.strip() for s in v.split(',')]
            return [int(s) for s in parts] if all(s.isdigit() for s in parts) else v
        try: return dtype(v)
        except ValueError: return v

    def _verify_choice(self, k, v, dflt):
        opts = self.choices[k]
        match = [o for o in opts if o.lower() == str(v).lower()]
        if match: setattr(self, k, match[0]); return True
        setattr(self, k + '_warning', 'bad spec ' + k + '=' + str(v) + '. Must be one of ' + ', '.join(opts) + '. Using default ' + str(dflt))
        setattr(self, k, dflt)
        return False

    def valid(self):
        return not self.warnings()

    def grid_sizes(self, d):
        """ Nodes per dimension: ``grid_size`` if set, else about ``m ** (1/d)`` (at least 4)."""
        if self.grid_size is not None: return self.grid_size
        return max(4, int(round(self.m ** (1. / d))))

    def stream_config(self, seed):
        return StreamConfig(pretrain_fraction=self.pretrain_fraction, test_fraction=self.test_fraction,
                            steps_per_observation=self.steps_per_observation, lr_batch=self.lr_batch,
                            lr_online=self.lr_online, epochs=self.epochs, grid_size=self.grid_sizes(1),
                            rank=self.rank, kernel=self.kernel, seed=seed, eval_every=self.eval_every)


def read_config_file(path):
    """ Flat ``key=value`` lines; ``#`` starts a comment, dashes in keys read as underscores.

    >>> import tempfile; path = os.path.join(tempfile.mkdtemp(), 'run.cfg')
    >>> with open(path, 'w') as f: _ = f.write('# online schedule\\nlr-online = 0.01\\n\\nepochs=50\\n')
    >>> read_config_file(path)
    {'lr_online': '0.01', 'epochs': '50'}
    """
    if not os.path.isfile(path): raise FileNotFoundError('config file not found: ' + str(path))
    out = {}
    with open(path, encoding='utf-8') as f:
        for no, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if not line: continue
            if '=' not in line: raise InvalidArgument('config line ' + str(no) + ' is not key=value: ' + line)
            k, v = line.split('=', 1)
            out[k.strip().replace('-', '_')] = v.strip()
    return out


def worker_threads(jobs):
    """ Worker count for ``jobs`` independent runs, capped by ``WISKI_THREADS`` when set."""
    cap = os.environ.get('WISKI_THREADS')
    if cap is None: return max(1, min(jobs, os.cpu_count() or 1))
    if not cap.strip().isdigit() or int(cap) < 1: raise InvalidArgument('WISKI_THREADS must be a positive integer, got ' + repr(cap))
    return max(1, min(jobs, int(cap)))


# ------------------------------------------------------------------ runners
def _synthetic(cfg, seed):
    make = {'sine': lambda: Datasets.sine(cfg.n, seed=seed), 'linear': lambda: Datasets.linear(cfg.n, cfg.dims, seed=seed),
            'field': lambda: Datasets.field(cfg.n, seed=seed), 'blobs': lambda: Datasets.blobs(cfg.n, seed=seed),
            'banana': lambda: Datasets.banana(cfg.n, seed=seed)}
    return make[cfg.synthetic]()


def _split(cfg, seed, labels=False):
    if cfg.data is not None:
        split = ingest_csv(cfg.data, cfg.target, standardize=not labels, split=True, seed=seed,
                           test_fraction=cfg.test_fraction, pretrain_fraction=cfg.pretrain_fraction)
        if labels:
            y = np.concatenate([split.y_pre, split.y_stream, split.y_test])
            if np.any(y != np.round(y)) or np.any(y < 0): raise DataError('class labels must be non-negative integers')
            split.y_pre, split.y_stream, split.y_test = (a.astype(int) for a in (split.y_pre, split.y_stream, split.y_test))
        return split
    X, y = _synthetic(cfg, seed)
    return Datasets.split(X, y, cfg.test_fraction, cfg.pretrain_fraction, seed, standardize=not labels)


def _regressor(cfg, d):
    kernel = Kernel(cfg.kernel, d)
    if cfg.model == 'exact': return ExactGP(kernel)
    return Wiski(Grid.default(d, cfg.grid_sizes(d)), kernel, rank=cfg.rank)


def run_stream_regress(cfg, seed):
    split = _split(cfg, seed)
    rows = stream_regression(_regressor(cfg, split.X_pre.shape[1]), split, cfg.stream_config(seed))
    return metrics_frame(rows)


def run_stream_classify(cfg, seed):
    split = _split(cfg, seed, labels=True)
    d = split.X_pre.shape[1]
    k = cfg.num_classes or int(max(split.y_pre.max(initial=0), split.y_stream.max(initial=0), split.y_test.max(initial=0))) + 1
    if cfg.model == 'exact': factory = lambda c: ExactGP(Kernel(cfg.kernel, d), noise=[])
    else: factory = lambda c: HeteroWiski(Grid.default(d, cfg.grid_sizes(d)), Kernel(cfg.kernel, d), rank=cfg.rank)
    rows = stream_classification(DirichletClassifier(max(k, 2), head_factory=factory, dims=d), split, cfg.stream_config(seed))
    return metrics_frame(rows)


def run_bayes_opt(cfg, seed):
    objective = TestObjective(cfg.objective, seed=seed)
    surrogate = _regressor(cfg, objective.dims)
    return bayes_opt_loop(objective, surrogate, cfg.iterations or 200, cfg.q or 3, seed, pool_size=cfg.pool_size or 512, beta=cfg.beta)


def run_active_learn(cfg, seed):
    objective = TestObjective('synthetic2dfield', seed=seed)
    if cfg.model == 'exact':
        model = ExactGP(Kernel('Matern12', 2, lengthscale_prior=(3., 6.), outputscale_prior=(2., .15)))
    else:
        model = field_model(cfg.grid_size or 30)
    return active_learning_loop(objective, model, cfg.iterations or 50, cfg.q or 6, cfg.strategy, seed, pool_size=cfg.pool_size or 256)


def run_bench_timing(cfg, seed):
    if cfg.model == 'exact':
        checkpoints = cfg.checkpoints or np.unique(np.geomspace(min(100, cfg.n), cfg.n, 6).astype(int)).tolist()
        return bench_timing(ExactGP(Kernel(cfg.kernel, 1)), cfg.n, checkpoints, seed, cfg.eval_every)
    model = Wiski(Grid.default(1, cfg.grid_size or cfg.m), Kernel(cfg.kernel, 1), rank=cfg.rank)
    return bench_timing(model, cfg.n, None, seed, cfg.eval_every)


def run_snapshot(cfg, seed):
    if cfg.load is not None:
        model = Wiski.load(cfg.load)
    else:
        split = _split(cfg, seed)
        model = _regressor(cfg, split.X_pre.shape[1])
        if not isinstance(model, Wiski): raise InvalidArgument('snapshots hold WISKI models only')
        model.init_state(split.X_train, split.y_train)
        if cfg.epochs > 0 and model.n >= 2: model.fit(cfg.epochs, cfg.lr_batch)
        model.save(cfg.out)
        log.info('saved %s state with n=%d to %s', type(model).__name__, model.n, cfg.out)
    summary = {'class': type(model).__name__, 'format': Wiski.snapshot_magic.decode('ascii'), 'n': int(model.n),
               'm': int(model.grid.m), 'rank': int(model.root.rank),
               'mll': round(model.mll(), 6) if model.n > 0 else None}
    sys.stdout.write(yaml.safe_dump(summary, sort_keys=True))
    return None


runners = {'stream-regress': run_stream_regress, 'stream-classify': run_stream_classify, 'bayes-opt': run_bayes_opt,
           'active-learn': run_active_learn, 'bench-timing': run_bench_timing, 'snapshot': run_snapshot}


def run_seeds(cfg):
    """ Runs ``cfg.seeds`` consecutive seeds (in worker threads when more than one) and stacks their tables."""
    base = 0 if cfg.seed is None else cfg.seed
    seeds = [base + i for i in range(cfg.seeds)]
    run = runners[cfg.subcommand]
    if len(seeds) == 1 or cfg.subcommand == 'snapshot': return run(cfg, seeds[0])
    with concurrent.futures.ThreadPoolExecutor(max_workers=worker_threads(len(seeds))) as pool:
        frames = list(pool.map(lambda s: run(cfg, s), seeds))
    return pd.concat([f.assign(seed=s) for f, s in zip(frames, seeds)], ignore_index=True)


# ------------------------------------------------------------------ parsing
def _int_list(s):
    try: return [int(v) for v in s.split(',') if v.strip()]
    except ValueError: raise argparse.ArgumentTypeError('expected comma-separated integers, got ' + repr(s))


def build_parser():
    parser = argparse.ArgumentParser(prog='wiski', description='Streaming SKI Gaussian processes (WISKI) experiments.')
    sub = parser.add_subparsers(dest='subcommand', metavar='subcommand')
    sub.required = True
    parser.subcommands = sub

    def common(p, data=True):
        p.add_argument('--config', help='flat key=value file; flags take precedence')
        p.add_argument('--seed', type=int, help='random seed (required)')
        p.add_argument('--seeds', type=int, help='number of consecutive seeds to run (default 1)')
        p.add_argument('--out', help='output CSV (stdout when omitted)')
        p.add_argument('--model', help='wiski (default) or exact')
        p.add_argument('--kernel', help='RBF (default) or Matern12')
        p.add_argument('--m', type=int, help='total inducing points (default 256)')
        p.add_argument('--grid-size', type=int, help='inducing points per dimension (overrides --m)')
        p.add_argument('--rank', type=int, help='root rank r')
        if data:
            p.add_argument('--data', help='CSV file with a header row')
            p.add_argument('--target', help='target column (default: last)')
            p.add_argument('--synthetic', help='synthetic dataset instead of --data')
            p.add_argument('--n', type=int, help='synthetic dataset size (default 1000)')
            p.add_argument('--dims', type=int, help='input dimension of the linear dataset')
            p.add_argument('--lr-batch', type=float, help='pretraining learning rate (default 5e-2)')
            p.add_argument('--lr-online', type=float, help='online learning rate (default 5e-3)')
            p.add_argument('--epochs', type=int, help='pretraining steps (default 200)')
            p.add_argument('--steps-per-observation', type=int, help='online hyperparameter steps per point (default 1)')
            p.add_argument('--eval-every', type=int, help='test metrics every k steps (default 1)')
            p.add_argument('--pretrain-fraction', type=float, help='share of train used for pretraining (default 0.05)')
            p.add_argument('--test-fraction', type=float, help='test share (default 0.1)')
        return p

    common(sub.add_parser('stream-regress', help='online regression, metrics per step'))
    p = common(sub.add_parser('stream-classify', help='online Dirichlet classification, accuracy per step'))
    p.add_argument('--num-classes', type=int, help='number of classes (default: from the labels)')

    for name, helptext in (('bayes-opt', 'batch UCB Bayesian optimization'), ('active-learn', 'NIPV or random active learning')):
        p = common(sub.add_parser(name, help=helptext), data=False)
        p.add_argument('--iterations', type=int, help='acquisition rounds (default 200 for bayes-opt, 50 for active-learn)')
        p.add_argument('--q', type=int, help='batch size per round (default 3 for bayes-opt, 6 for active-learn)')
        p.add_argument('--pool-size', type=int, help='random candidates per round')
        if name == 'bayes-opt':
            p.add_argument('--objective', help='Levy3 (default), Ackley3 or sine1d')
            p.add_argument('--beta', type=float, help='UCB exploration weight (default 0.2)')
        else:
            p.add_argument('--strategy', help='nipv (default) or random')

    p = common(sub.add_parser('bench-timing', help='wall time per update on a sine stream'), data=False)
    p.add_argument('--n', type=int, help='stream length (default 1000)')
    p.add_argument('--eval-every', type=int, help='test metrics every k steps')
    p.add_argument('--checkpoints', type=_int_list, help='exact GP: comma-separated n to time')

    p = common(sub.add_parser('snapshot', help='build and save, or load and inspect, a WISKI state'))
    p.add_argument('--load', help='snapshot file to inspect')
    return parser


def _values(args):
    flags = {k: v for k, v in vars(args).items() if k not in ('subcommand', 'config') and v is not None}
    values = read_config_file(args.config) if args.config else {}
    values.update(flags)
    return values


def _check_required(cfg, sub_parser):
    if cfg.subcommand == 'snapshot' and cfg.load is not None: return
    if cfg.seed is None: sub_parser.error('the following arguments are required: --seed')
    needs_data = cfg.subcommand in ('stream-regress', 'stream-classify', 'snapshot')
    if needs_data and cfg.data is None and cfg.synthetic is None: sub_parser.error('one of --data or --synthetic is required')
    if cfg.subcommand == 'snapshot' and cfg.out is None: sub_parser.error('--out is required to save a snapshot')


def parse_and_dispatch(argv):
    """ Parses ``argv``, runs the subcommand and returns the exit code.

    Examples
    --------
    >>> import tempfile; folder = tempfile.mkdtemp(); out = os.path.join(folder, 't.csv')
    >>> parse_and_dispatch(['bench-timing', '--n', '60', '--m', '16', '--seed', '0', '--eval-every', '20', '--out', out])
    0
    >>> df = pd.read_csv(out); list(df.columns), len(df)
    (['step', 'elapsed_ms', 'rmse', 'nll'], 60)

    Metric columns are reproducible for a fixed seed:

    >>> args = ['stream-regress', '--synthetic', 'sine', '--n', '120', '--m', '32', '--epochs', '5', '--eval-every', '25', '--seed', '1']
    >>> a, b = os.path.join(folder, 'a.csv'), os.path.join(folder, 'b.csv')
    >>> parse_and_dispatch(args + ['--out', a]), parse_and_dispatch(args + ['--out', b])
    (0, 0)
    >>> cols = ['step', 'rmse', 'nll', 'lengthscale_0', 'outputscale', 'noise']
    >>> pd.read_csv(a)[cols].equals(pd.read_csv(b)[cols])
    True

    Usage, missing files and malformed data map to exit codes 2, 3 and 4:

    >>> parse_and_dispatch(['stream-regress', '--seed', '1'])
    2
    >>> parse_and_dispatch(['stream-regress', '--synthetic', 'sine'])
    2
    >>> parse_and_dispatch(['bench-timing', '--seed', '0', '--epochs', '3'])
    2
    >>> parse_and_dispatch(['bench-timing', '--seed', '0', '--n=-5'])
    2
    >>> parse_and_dispatch(['stream-regress', '--data', os.path.join(folder, 'absent.csv'), '--seed', '0'])
    3
    >>> bad = os.path.join(folder, 'bad.csv')
    >>> with open(bad, 'w') as f: _ = f.write('x,y\\n' + '\\n'.join(str(i) + ',1' for i in range(20)) + '\\n3,abc\\n')
    >>> parse_and_dispatch(['stream-regress', '--data', bad, '--seed', '0'])
    4
    >>> cfg = os.path.join(folder, 'run.cfg')
    >>> with open(cfg, 'w') as f: _ = f.write('colour=blue\\n')
    >>> parse_and_dispatch(['bench-timing', '--config', cfg, '--seed', '0'])
    2

    Snapshots are written and read back:

    >>> snap = os.path.join(folder, 'state.wiski')
    >>> parse_and_dispatch(['snapshot', '--synthetic', 'sine', '--n', '100', '--m', '16', '--epochs', '0', '--seed', '0', '--out', snap])
    class: Wiski
    format: WISKI-SNAPSHOT 1
    m: 16
    mll: ...
    n: 90
    rank: 16
    0
    >>> parse_and_dispatch(['snapshot', '--load', snap])
    class: Wiski
    format: WISKI-SNAPSHOT 1
    m: 16
    mll: ...
    n: 90
    rank: 16
    0
    >>> with open(snap, 'r+b') as f: _ = f.seek(len(Wiski.snapshot_magic) + 1); _ = f.write(b'[')
    >>> parse_and_dispatch(['snapshot', '--load', snap])
    4
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    sub_parser = parser.subcommands.choices[args.subcommand]

    try:
        cfg = RunConfig(args.subcommand, _values(args))
        if not cfg.valid():
            for k, msg in sorted(cfg.warnings().items()): log.error(msg)
            return EXIT_USAGE
        try:
            _check_required(cfg, sub_parser)
        except SystemExit:
            return EXIT_USAGE

        log.info('running %s with seed %s (metrics schema v%d)', cfg.subcommand, cfg.seed, METRICS_SCHEMA_VERSION)
        out = run_seeds(cfg)
        if out is not None:
            if cfg.out is None: sys.stdout.write(out.to_csv(index=False))
            else:
                out.to_csv(cfg.out, index=False)
                log.info('wrote %d rows to %s', len(out), cfg.out)
        return EXIT_OK
    except FileNotFoundError as e:
        log.error(str(e))
        return EXIT_MISSING
    except DataError as e:
        log.error(str(e))
        return EXIT_DATA
    except (InvalidArgument, DimensionError) as e:
        log.error(str(e))
        return EXIT_USAGE
    except WiskiError as e:
        log.error(type(e).__name__ + ': ' + str(e))
        return 1


def main():
    logging.basicConfig(level=logging.INFO, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.captureWarnings(True)
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
