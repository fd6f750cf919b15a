import time
import numpy as np
import pandas as pd

try: from wiski.Dirichlet import *
except ImportError: from Dirichlet import *
try: from wiski.Objectives import *
except ImportError: from Objectives import *


class StreamConfig(FitSpec):
    """ Validated settings of an online experiment.

    Each field goes through ``add_verify``: an out-of-range or mistyped value falls back to its
    default and leaves a ``<field>_warning``. Defaults follow the batch/online schedule
    200 pretraining epochs at learning rate 5e-2, then 5e-3 online.

    Examples
    --------
    >>> StreamConfig(steps_per_observation=0).steps_per_observation, StreamConfig().valid()
    (0, True)
    >>> cfg = StreamConfig(pretrain_fraction=1.5); cfg.pretrain_fraction, cfg.valid()
    (0.05, False)
    >>> cfg.pretrain_fraction_warning
    'bad spec pretrain_fraction=1.5. Must be 0 <= float <= 1. Using default 0.05'
    """
    def __init__(self, pretrain_fraction=0.05, test_fraction=0.1, steps_per_observation=1, lr_batch=5e-2, lr_online=5e-3,
                 epochs=200, grid_size=25, rank=None, kernel='RBF', seed=0, eval_every=1, print_precision=9):
        super().__init__(print_precision=print_precision)
        self.add_verify(dtype=float, min=0, max=1, dflt=0.05, pretrain_fraction=pretrain_fraction)
        self.add_verify(dtype=float, min=0, max=1, dflt=0.1, test_fraction=test_fraction)
        self.add_verify(dtype=int, min=0, max=None, dflt=1, steps_per_observation=steps_per_observation)
        self.add_verify(dtype=float, min=0, max=None, dflt=5e-2, lr_batch=lr_batch)
        self.add_verify(dtype=float, min=0, max=None, dflt=5e-3, lr_online=lr_online)
        self.add_verify(dtype=int, min=0, max=None, dflt=200, epochs=epochs)
        self.add_verify(dtype=int, min=4, max=None, dflt=25, grid_size=grid_size)
        self.add_verify(dtype=str, min=None, max=None, dflt='RBF', kernel=kernel)
        self.add_verify(dtype=int, min=0, max=None, dflt=0, seed=seed)
        self.add_verify(dtype=int, min=1, max=None, dflt=1, eval_every=eval_every)
        if rank is not None: self.add_verify(dtype=int, min=1, max=None, dflt=None, rank=rank)
        else: self.rank = None

    def valid(self):
        return not self.warnings()


class MetricsRow(SpecPrinter):
    """ One line of an online run: update wall time plus test metrics of the model *before* it saw this step's target.

    >>> MetricsRow(3, 1.5, rmse=.2, nll=.4, params=KernelParams([0.], 0., 0.)).to_dict()
    {'step': 3, 'elapsed_ms': 1.5, 'rmse': 0.2, 'nll': 0.4, 'lengthscale_0': 1.0, 'outputscale': 1.0, 'noise': 1.0}
    """
    def __init__(self, step, elapsed_ms, rmse=None, nll=None, accuracy=None, params=None):
        super().__init__()
        self.step, self.elapsed_ms = int(step), float(elapsed_ms)
        self.rmse, self.nll, self.accuracy = rmse, nll, accuracy
        self.params = params

    def to_dict(self):
        out = {'step': self.step, 'elapsed_ms': self.elapsed_ms}
        if self.accuracy is not None: out['accuracy'] = self.accuracy
        else: out.update(rmse=self.rmse, nll=self.nll)
        if self.params is not None:
            out.update({'lengthscale_' + str(i): float(l) for i, l in enumerate(self.params.lengthscales)})
            out.update(outputscale=self.params.outputscale, noise=self.params.noise)
        return out


def metrics_frame(rows):
    """ ``pandas.DataFrame`` of :class:`MetricsRow` dictionaries, in stream order."""
    return pd.DataFrame([r.to_dict() for r in rows])


def _test_metrics(model, split):
    post = model.predict(split.X_test)
    return post.rmse(split.y_test), post.nll(split.y_test)


def stream_regression(model, split, cfg=None):
    """ Pretrains ``model`` in batch, then streams the remaining points one at a time.

    Per step: test RMSE/NLL of the current model (every ``eval_every`` steps and at the last one),
    then the timed update: projection step (if the model has a projection), ``condition``,
    ``steps_per_observation`` hyperparameter steps.

    Parameters
    ----------
    model : Wiski or ExactGP
    split : DataSplit
        Standardized data, e.g. from ``Datasets.split``.
    cfg : StreamConfig, optional

    Returns
    -------
    list of MetricsRow

    Examples
    --------
    >>> X, y = Datasets.sine(150, seed=0); split = Datasets.split(X, y, seed=0)
    >>> cfg = StreamConfig(epochs=20, eval_every=50)
    >>> rows = stream_regression(Wiski(Grid.default(1, 64), params=KernelParams([np.log(.2)])), split, cfg)
    >>> len(rows), rows[0].step, bool(all(r.elapsed_ms > 0 for r in rows))
    (128, 1, True)
    >>> bool(rows[-1].rmse < .6)
    True
    >>> list(metrics_frame(rows).columns)
    ['step', 'elapsed_ms', 'rmse', 'nll', 'lengthscale_0', 'outputscale', 'noise']

    Without hyperparameter steps the parameters stay put:

    >>> rows = stream_regression(Wiski(Grid.default(1, 32)), split, StreamConfig(epochs=0, steps_per_observation=0, eval_every=200))
    >>> len({tuple(r.params.vector()) for r in rows})
    1

    Acceptance-scale comparison against the exact GP on the same stream:

    >>> X, y = Datasets.sine(2000, seed=1); split = Datasets.split(X, y, seed=1)                     # doctest: +SKIP
    >>> w = stream_regression(Wiski(Grid.default(1, 256)), split, StreamConfig(eval_every=500))       # doctest: +SKIP
    >>> e = stream_regression(ExactGP(), split, StreamConfig(eval_every=500))                         # doctest: +SKIP
    >>> w[-1].rmse <= 1.1 * e[-1].rmse                                                               # doctest: +SKIP
    True
    """
    cfg = StreamConfig() if cfg is None else cfg
    model.init_state(split.X_pre, split.y_pre)
    if model.n >= 2 and cfg.epochs > 0: model.fit(cfg.epochs, cfg.lr_batch)

    opt = Adam(lr=cfg.lr_online)
    last = len(split.y_stream)
    rows, rmse, nll = [], None, None
    for t, (x, y) in enumerate(zip(split.X_stream, split.y_stream), 1):
        if (t - 1) % cfg.eval_every == 0 or t == last:
            rmse, nll = _test_metrics(model, split) if model.n > 0 else (None, None)
        params = model.params.copy()

        t0 = time.perf_counter()
        if getattr(model, 'projection', None) is not None and model.n > 0: model.projection_step(x, y, cfg.lr_online)
        model.condition(x, y)
        for _ in range(cfg.steps_per_observation):
            if model.n >= 2: model.hyper_step(opt)
        elapsed = (time.perf_counter() - t0) * 1e3

        rows.append(MetricsRow(t, elapsed, rmse, nll, params=params))
    return rows


def stream_classification(clf, split, cfg=None):
    """ Online Dirichlet classification: per step, test accuracy before the update, then the timed update.

    ``split`` holds integer labels (``Datasets.split(..., standardize=False)``).

    >>> X, c = Datasets.blobs(200, seed=3); split = Datasets.split(X, c, seed=3, standardize=False)
    >>> rows = stream_classification(DirichletClassifier(2, dims=2), split, StreamConfig(epochs=5, steps_per_observation=0, eval_every=40))
    >>> bool(rows[-1].accuracy >= .95), list(metrics_frame(rows).columns)
    (True, ['step', 'elapsed_ms', 'accuracy'])
    >>> stream_classification(DirichletClassifier(2, dims=2), Datasets.split(X, np.full_like(c, 5), seed=3, standardize=False))
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: label 5 is not a class id in [0, 2)

    WISKI heads track exact heads on the banana set:

    >>> X, c = Datasets.banana(200, seed=0); split = Datasets.split(X, c, test_fraction=.2, seed=0, standardize=False)
    >>> cfg = StreamConfig(epochs=5, steps_per_observation=0, eval_every=50)
    >>> wiski_heads = lambda k: HeteroWiski(Grid.default(2, 12), Kernel('RBF', 2))
    >>> exact_heads = lambda k: ExactGP(Kernel('RBF', 2), noise=[])
    >>> w = stream_classification(DirichletClassifier(2, head_factory=wiski_heads), split, cfg)[-1].accuracy
    >>> e = stream_classification(DirichletClassifier(2, head_factory=exact_heads), split, cfg)[-1].accuracy
    >>> bool(min(w, e) >= .75), bool(abs(w - e) <= .1)
    (True, True)

    Full size, default heads:

    >>> X, c = Datasets.banana(400, seed=0); split = Datasets.split(X, c, seed=0, standardize=False)           # doctest: +SKIP
    >>> w = stream_classification(DirichletClassifier(2, dims=2), split)[-1].accuracy                          # doctest: +SKIP
    >>> e = stream_classification(DirichletClassifier(2, head_factory=exact_heads), split)[-1].accuracy        # doctest: +SKIP
    >>> abs(w - e) <= .05                                                                                      # doctest: +SKIP
    True
    """
    cfg = StreamConfig() if cfg is None else cfg
    clf.init_state(split.X_pre, split.y_pre)
    if clf.n >= 2 and cfg.epochs > 0: clf.fit(cfg.epochs, cfg.lr_batch)

    last = len(split.y_stream)
    rows, acc = [], None
    for t, (x, c) in enumerate(zip(split.X_stream, split.y_stream), 1):
        if (t - 1) % cfg.eval_every == 0 or t == last:
            acc = float(np.mean(clf.predict(split.X_test) == split.y_test))
        t0 = time.perf_counter()
        clf.condition(x, c)
        for _ in range(cfg.steps_per_observation): clf.hyper_step(cfg.lr_online)
        rows.append(MetricsRow(t, (time.perf_counter() - t0) * 1e3, accuracy=acc))
    return rows


def bench_timing(model, n_max, checkpoints=None, seed=0, eval_every=500, n_test=200):
    """ Wall time per update (``condition`` + one ``hyper_step`` + one ``predict``) on a synthetic sine stream.

    Without ``checkpoints`` the model is streamed step by step up to ``n_max``. With ``checkpoints``
    (the exact-GP baseline) it is refit on the first ``n`` points at each checkpoint and one update is timed.

    Returns
    -------
    pandas.DataFrame
        columns ``step, elapsed_ms, rmse, nll``; ``rmse``/``nll`` are filled every ``eval_every`` steps.

    Examples
    --------
    >>> df = bench_timing(Wiski(Grid.default(1, 32)), 60, eval_every=20)
    >>> list(df.columns), len(df), int(df['rmse'].notna().sum())
    (['step', 'elapsed_ms', 'rmse', 'nll'], 60, 3)
    >>> len(bench_timing(ExactGP(), 200, checkpoints=[50, 100, 200]))
    3

    Constant time per step for WISKI and cubic growth for the exact GP:

    >>> df = bench_timing(Wiski(Grid.default(1, 256)), 5000)                                          # doctest: +SKIP
    >>> df.elapsed_ms[4500:].median() <= 1.5 * df.elapsed_ms[450:550].median()                        # doctest: +SKIP
    True
    >>> ex = bench_timing(ExactGP(), 4000, checkpoints=[1000, 4000])                                  # doctest: +SKIP
    >>> ex.elapsed_ms.iloc[1] >= 8 * ex.elapsed_ms.iloc[0]                                            # doctest: +SKIP
    True
    """
    X, y = Datasets.sine(n_max + n_test, seed=seed)
    Xt, yt = X[n_max:], y[n_max:]
    rows = []

    def timed_update(x, yv, x_next):
        t0 = time.perf_counter()
        model.condition(x, yv)
        if model.n >= 2: model.hyper_step()
        model.predict(x_next)
        return (time.perf_counter() - t0) * 1e3

    if checkpoints is None:
        model.init_state(X[:0], y[:0])
        for t in range(n_max):
            ms = timed_update(X[t], y[t], X[min(t + 1, n_max - 1)])
            rmse = nll = np.nan
            if (t + 1) % eval_every == 0:
                post = model.predict(Xt)
                rmse, nll = post.rmse(yt), post.nll(yt)
            rows.append({'step': t + 1, 'elapsed_ms': ms, 'rmse': rmse, 'nll': nll})
    else:
        for n in checkpoints:
            n = int(min(n, n_max))
            model.init_state(X[:n - 1], y[:n - 1])
            ms = timed_update(X[n - 1], y[n - 1], X[n - 1])
            post = model.predict(Xt)
            rows.append({'step': n, 'elapsed_ms': ms, 'rmse': post.rmse(yt), 'nll': post.nll(yt)})
    return pd.DataFrame(rows, columns=['step', 'elapsed_ms', 'rmse', 'nll'])


def timing_slope(df, bins=10):
    """ Log-log slope of median step time against ``n``: about 0 for constant-time updates, about 3 for refitting.

    >>> df = pd.DataFrame({'step': np.arange(1, 1001), 'elapsed_ms': np.full(1000, 2.)})
    >>> round(timing_slope(df), 6) + 0.
    0.0
    """
    edges = np.unique(np.geomspace(df['step'].min(), df['step'].max(), bins + 1).astype(int))
    mids, med = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = df[(df['step'] >= lo) & (df['step'] < hi)]
        if len(sel): mids.append(np.sqrt(lo * hi)); med.append(sel['elapsed_ms'].median())
    if len(mids) < 2: return float('nan')
    return float(np.polyfit(np.log(mids), np.log(med), 1)[0])
