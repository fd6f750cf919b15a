import warnings
import numpy as np
import scipy.linalg

try: from wiski.Kernels import *
except ImportError: from Kernels import *


class RandomField(SpecPrinter):
    """ Smooth random function on :math:`[-1, 1]^d`: one draw of a separable GP on a grid, cubic-interpolated in between.

    The draw applies the Cholesky factor of each 1-D kernel factor along its axis, so no
    :math:`m \\times m` matrix is formed.

    Examples
    --------
    >>> f = RandomField(seed=0); f([[0., 0.], [.5, -.5]]).shape
    (2,)
    >>> np.allclose(f([[.1, .2]]), RandomField(seed=0)([[.1, .2]])), np.allclose(f([[.1, .2]]), RandomField(seed=1)([[.1, .2]]))
    (True, False)
    >>> g = f.grid; np.allclose(f(g.points()[:5]), f.values[:5])
    True
    """
    def __init__(self, dims=2, lengthscale=0.3, outputscale=1., size=40, family='Matern12', seed=0, print_precision=9):
        super().__init__(print_precision=print_precision)
        self.dims, self.family = int(dims), family
        self.grid = Grid([(-1., 1.)] * self.dims, size)
        params = KernelParams(np.full(self.dims, np.log(lengthscale)), np.log(outputscale))
        K = Kernel(family, self.dims).kuu_operator(params, self.grid)
        X = Util.rng(seed).standard_normal(self.grid.sizes)
        for i, f in enumerate(K.factors):
            C = scipy.linalg.cholesky(f.dense() + 1e-10 * np.eye(f.size), lower=True)
            X = np.moveaxis(np.tensordot(C, np.moveaxis(X, i, 0), axes=1), 0, i)
        self.values = X.ravel()

    def __call__(self, X):
        return self.grid.interp_matrix(Util.as_points(X, self.dims)) @ self.values


class TestObjective(SpecPrinter):
    r""" Noisy test function on the unit cube :math:`[-1, 1]^d`, mapped affinely to its native domain.

    Calling the objective returns the value to *maximize*: the negated Levy and Ackley
    functions (optimum 0), :math:`\sin(2\pi x)` and a :class:`RandomField`.
    ``evaluate`` adds Gaussian noise of standard deviation ``noise_sd``
    (defaults: Levy 10, Ackley 4, sine 0.2, field 0.05).

    Examples
    --------
    >>> levy = TestObjective('Levy3'); levy.dims, levy.noise_sd
    (3, 10.0)
    >>> Util.round(levy.native_value([[1., 1., 1.]]), 10), Util.round(TestObjective('Ackley3').native_value(np.zeros((1, 3))), 10)
    ([0.0], [0.0])
    >>> Util.round(levy.to_native([[.1, -1., 1.]]), 10)
    [[1.0, -10.0, 10.0]]
    >>> Util.round(levy([[.1, .1, .1]]), 10)
    [0.0]
    >>> bool(np.all(levy(np.random.default_rng(0).uniform(-1, 1, (50, 3))) <= 0))
    True
    >>> Util.round(TestObjective('sine1d')([[.25]]), 10)
    [1.0]
    >>> TestObjective('Rastrigin3')
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: unknown objective Rastrigin3; use one of Ackley3, Levy3, sine1d, synthetic2dfield

    :Authors:
        wiski developers
    """
    domains = {'Levy3': (-10., 10., 3), 'Ackley3': (-32.768, 32.768, 3), 'sine1d': (-1., 1., 1), 'synthetic2dfield': (-1., 1., 2)}
    noise_defaults = {'Levy3': 10., 'Ackley3': 4., 'sine1d': 0.2, 'synthetic2dfield': 0.05}

    def __init__(self, name, noise_sd=None, seed=0, print_precision=9):
        super().__init__(print_precision=print_precision)
        if name not in self.domains:
            raise InvalidArgument('unknown objective ' + str(name) + '; use one of ' + ', '.join(sorted(self.domains)))
        self.name = name
        self.noise_sd = float(self.noise_defaults[name] if noise_sd is None else noise_sd)
        self.dims = self.domains[name][2]
        self.field = RandomField(seed=seed) if name == 'synthetic2dfield' else None

    def to_native(self, U):
        lo, hi, d = self.domains[self.name]
        return lo + (Util.as_points(U, d) + 1.) / 2. * (hi - lo)

    def native_value(self, Z):
        """ The textbook function at native coordinates (Levy and Ackley are minimized at 0)."""
        Z = Util.as_points(Z, self.dims)
        if self.name == 'Levy3':
            w = 1. + (Z - 1.) / 4.
            head = np.sin(np.pi * w[:, 0]) ** 2
            mid = np.sum((w[:, :-1] - 1.) ** 2 * (1. + 10. * np.sin(np.pi * w[:, :-1] + 1.) ** 2), axis=1)
            tail = (w[:, -1] - 1.) ** 2 * (1. + np.sin(2. * np.pi * w[:, -1]) ** 2)
            return head + mid + tail
        if self.name == 'Ackley3':
            a = -20. * np.exp(-0.2 * np.sqrt(np.mean(Z ** 2, axis=1)))
            return a - np.exp(np.mean(np.cos(2. * np.pi * Z), axis=1)) + 20. + np.e
        if self.name == 'sine1d': return np.sin(2. * np.pi * Z[:, 0])
        return self.field(Z)

    def __call__(self, U):
        v = self.native_value(self.to_native(U))
        return -v if self.name in ('Levy3', 'Ackley3') else v

    def evaluate(self, U, seed=None):
        """ Noisy observations at unit-cube points ``U``."""
        f = self(U)
        return f + self.noise_sd * Util.rng(seed).standard_normal(f.shape)


class DataSplit(SpecPrinter):
    """ Pretrain / stream / test partition of a dataset plus the training-split scaling statistics."""
    def __init__(self, X_pre, y_pre, X_stream, y_stream, X_test, y_test, x_min=None, x_max=None, y_mean=0., y_std=1.):
        super().__init__()
        self.X_pre, self.y_pre, self.X_stream, self.y_stream, self.X_test, self.y_test = X_pre, y_pre, X_stream, y_stream, X_test, y_test
        self.x_min, self.x_max, self.y_mean, self.y_std = x_min, x_max, y_mean, y_std

    @property
    def X_train(self):
        return np.vstack([self.X_pre, self.X_stream])

    @property
    def y_train(self):
        return np.concatenate([self.y_pre, self.y_stream])


class Datasets:
    """ Synthetic streams and the train/test protocol: seeded 90/10 split, 5% of train for pretraining,
    features min-max scaled to :math:`[-1, 1]` and targets standardized with training statistics only.

    Examples
    --------
    >>> X, y = Datasets.sine(200, seed=0); X.shape, bool(np.all(np.abs(X) <= 1))
    ((200, 1), True)
    >>> s = Datasets.split(X, y, seed=0)
    >>> len(s.y_pre), len(s.y_stream), len(s.y_test)
    (9, 171, 20)
    >>> round(float(s.y_train.mean()), 10) + 0., round(float(s.y_train.std()), 10)
    (0.0, 1.0)
    >>> X, c = Datasets.blobs(100, seed=1); sorted(set(c.tolist()))
    [0, 1]
    >>> X, c = Datasets.banana(400, seed=2); X.shape, bool(np.all(np.abs(X) <= 1))
    ((400, 2), True)
    >>> Datasets.split(np.zeros((3, 1)), np.zeros(3))
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: dataset of 3 rows is too small for a train/test split
    """
    @staticmethod
    def sine(n, noise_sd=0.2, seed=None):
        """ :math:`y = \\sin(2\\pi x) + \\varepsilon` with :math:`x \\sim U[-1, 1]`."""
        rng = Util.rng(seed)
        X = rng.uniform(-1., 1., (n, 1))
        return X, np.sin(2. * np.pi * X[:, 0]) + noise_sd * rng.standard_normal(n)

    @staticmethod
    def linear(n, dims=1, seed=None):
        """ Noiseless :math:`y = \\sum_i x_i`."""
        X = Util.rng(seed).uniform(-1., 1., (n, dims))
        return X, X.sum(axis=1)

    @staticmethod
    def blobs(n, sd=0.15, seed=None):
        """ Two Gaussian blobs centered at :math:`\\pm(0.5, 0.5)`, clipped to the unit square."""
        rng = Util.rng(seed)
        labels = rng.integers(0, 2, n)
        centers = np.array([[-.5, -.5], [.5, .5]])
        return np.clip(centers[labels] + sd * rng.standard_normal((n, 2)), -1., 1.), labels

    @staticmethod
    def banana(n, noise_sd=0.1, seed=None):
        """ Two interleaved crescents, scaled into the unit square."""
        rng = Util.rng(seed)
        labels = rng.integers(0, 2, n)
        t = rng.uniform(0., np.pi, n)
        X = np.column_stack([np.cos(t), np.sin(t)])
        X[labels == 1] = np.column_stack([1. - np.cos(t), .5 - np.sin(t)])[labels == 1]
        X += noise_sd * rng.standard_normal((n, 2))
        lo, hi = X.min(axis=0), X.max(axis=0)
        return 2. * (X - lo) / (hi - lo) - 1., labels

    @staticmethod
    def field(n, noise_sd=0.05, seed=None):
        """ Noisy draws of a 2-D Matern-1/2 :class:`RandomField` at uniform locations."""
        rng = Util.rng(seed)
        f = RandomField(seed=rng)
        X = rng.uniform(-1., 1., (n, 2))
        return X, f(X) + noise_sd * rng.standard_normal(n)

    @staticmethod
    def scale(X_train, X_test, y_train=None, y_test=None):
        """ Min-max features to :math:`[-1, 1]` and standardize targets (population sd), training statistics only.

        >>> Xs, _, ys, _, st = Datasets.scale(np.array([[0.], [10.]]), np.zeros((0, 1)), np.array([1., 3.]), np.zeros(0))
        >>> Xs.ravel().tolist(), ys.tolist()
        ([-1.0, 1.0], [-1.0, 1.0])
        >>> with warnings.catch_warnings(record=True) as w:
        ...     warnings.simplefilter('always')
        ...     Xc = Datasets.scale(np.ones((3, 1)), np.ones((1, 1)))[0]
        >>> Xc.ravel().tolist(), str(w[0].message)
        ([0.0, 0.0, 0.0], 'constant feature column(s) [0] scaled to 0')
        """
        lo, hi = X_train.min(axis=0), X_train.max(axis=0)
        span = hi - lo
        const = span == 0
        if np.any(const): warnings.warn('constant feature column(s) ' + str(np.flatnonzero(const).tolist()) + ' scaled to 0', UserWarning)
        span = np.where(const, 1., span)
        f = lambda X: np.where(const, 0., 2. * (X - lo) / span - 1.)
        stats = {'x_min': lo, 'x_max': hi, 'y_mean': 0., 'y_std': 1.}
        if y_train is None: return f(X_train), f(X_test), None, None, stats

        mu, sd = float(y_train.mean()), float(y_train.std())
        if sd == 0: sd = 1.
        stats.update(y_mean=mu, y_std=sd)
        return f(X_train), f(X_test), (y_train - mu) / sd, (y_test - mu) / sd, stats

    @staticmethod
    def split(X, y, test_fraction=0.1, pretrain_fraction=0.05, seed=None, standardize=True):
        """ Seeded shuffle into pretrain / stream / test parts (:class:`DataSplit`)."""
        X, y = np.asarray(X, dtype=float), np.asarray(y)
        n = y.shape[0]
        n_test = int(round(test_fraction * n))
        if n_test < 1 or n - n_test < 2: raise InvalidArgument('dataset of ' + str(n) + ' rows is too small for a train/test split')
        perm = Util.rng(seed).permutation(n)
        tr, te = perm[:n - n_test], perm[n - n_test:]
        if standardize:
            Xtr, Xte, ytr, yte, st = Datasets.scale(X[tr], X[te], y[tr].astype(float), y[te].astype(float))
        else:
            Xtr, Xte, _, _, st = Datasets.scale(X[tr], X[te])
            ytr, yte = y[tr], y[te]
        n_pre = int(round(pretrain_fraction * tr.size))
        if pretrain_fraction > 0: n_pre = max(n_pre, 1)
        return DataSplit(Xtr[:n_pre], ytr[:n_pre], Xtr[n_pre:], ytr[n_pre:], Xte, yte, **st)
