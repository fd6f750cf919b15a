import copy
import warnings
import numpy as np

try: from wiski.Kernels import *
except ImportError: from Kernels import *


class FitSpec(SpecPrinter):
    """ FitSpec verifies and saves configuration values and intermediate results of a model.

    Use this object to store the objective, step counts, solver diagnostics and warnings of your model.

    A typical structure after a few online steps of a WISKI model:

    .. code::

          hyper_steps: 3
          mll: -41.278331967
          n: 120
          q_solver: cholesky
          rank: 64

    :Authors:
        wiski developers
    """
    def __init__(self, print_precision=9, **kwargs):
        """ Constructor.

        Calls ``add()`` method to save named input variables.

        Parameters
        ----------
        print_precision : int, optional
            Sets number of decimal digits to which printed output is rounded.
        kwargs : object, optional
            any named input (key=value, key=value,...) that needs to be stored at ``FitSpec``
        """
        super().__init__(print_precision=print_precision)
        self.add(**kwargs)

    def add_verify(self, dtype=None, min=None, max=None, dflt=None, **kwargs):
        """ Asserts the type and range of passed ``kwargs`` parameter *key*=*value*.

        Use this function to validate and save user's input.
        If assertion fails, default value is used and message is saved into FitSpec variable as ``[key]_warning``.
        Only the first kwargs argument will be saved. ``dtype=float`` accepts any real number.

        Parameters
        ----------
        dtype : {None, int, float, str, ...}
            Specifies the type of the input variable. ``None`` results in no constraint on type of *value*
        min : {None, number}
            Specifies the minimum of the range for the *value*.
        max : {None, number}
            Specifies the maximum of the range for the *value*.
        dflt : object
            If range/type assertions failed, this (default) value will be used.
        kwargs :
            A single *key*=*value* pair that needs to be validated and stored.

        Returns
        -------
        bool
            ``True`` if the value was accepted.

        Examples
        --------
        >>> fs = FitSpec()
        >>> _ = fs.add_verify(dtype=int, min=1, max=None, dflt=200, epochs=50); fs
        FitSpec
        epochs: 50

        >>> fs.add_verify(dtype=int, min=1, max=100, dflt=200, epochs=101); fs
        False
        FitSpec
        epochs: 200
        epochs_warning: bad spec epochs=101. Must be 1 <= int <= 100. Using default 200

        >>> _ = fs.add_verify(dtype=float, min=0, max=1, dflt=.05, pretrain_fraction=1); fs.pretrain_fraction
        1
        >>> _ = fs.add_verify(dtype=float, min=0, max=1, dflt=.05, pretrain_fraction='bla'); fs.pretrain_fraction_warning
        'bad spec pretrain_fraction=bla. Must be 0 <= float <= 1. Using default 0.05'
        """
        k, v = tuple(kwargs.keys())[0], tuple(kwargs.values())[0]

        use_default = v is None
        if not (use_default or dtype is None):
            ok = Util.is_number(v) if dtype is float else (isinstance(v, dtype) and not (dtype is int and isinstance(v, bool)))
            if not ok: use_default = True
        if not (use_default or min is None):
            if v < min: use_default = True
        if not (use_default or max is None):
            if v > max: use_default = True

        if use_default:
            msg = 'bad spec ' + k + '=' + str(v) \
                + '. Must be ' + str(min) + ' <= ' + (dtype.__name__ if dtype else 'object') + ' <= ' + str(max) \
                + '. Using default ' + str(dflt)
            v = dflt
            setattr(self, k + '_warning', msg)

        setattr(self, k, v)
        return not use_default

    def add(self, **kwargs):
        """ Adds all key/value input arguments as class variables

        Returns
        -------
        self : FitSpec
        """
        for K, v in kwargs.items():
            if v is not None: setattr(self, K, v)
        return self

    def warnings(self):
        """ All ``*_warning`` messages recorded so far, keyed by the offending field."""
        return {k[:-len('_warning')]: v for k, v in vars(self).items() if k.endswith('_warning')}


class PosteriorGaussian(SpecPrinter):
    """ Predictive marginals at query points: latent ``mean`` and ``variance``, plus likelihood ``noise``.

    Examples
    --------
    >>> pg = PosteriorGaussian([0., 1.], [1., 3.], noise=1.)
    >>> pg.obs_variance.tolist(), Util.round(pg.std(), 6)
    ([2.0, 4.0], [1.414214, 2.0])
    >>> round(pg.rmse([0., 3.]), 6)
    1.414214
    >>> round(pg.nll([0., 1.]), 6)
    1.438799
    """
    def __init__(self, mean, variance, noise=0., print_precision=9):
        super().__init__(print_precision=print_precision)
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.variance = np.maximum(np.atleast_1d(np.asarray(variance, dtype=float)), 0.)
        self.noise = noise

    @property
    def obs_variance(self):
        return self.variance + self.noise

    def std(self, observed=True):
        return np.sqrt(self.obs_variance if observed else self.variance)

    def rmse(self, y):
        return float(np.sqrt(np.mean((self.mean - np.asarray(y, float)) ** 2)))

    def nll(self, y):
        """ Mean Gaussian negative log predictive density of targets ``y``."""
        s2 = self.obs_variance
        return float(np.mean(0.5 * np.log(2 * np.pi * s2) + 0.5 * (np.asarray(y, float) - self.mean) ** 2 / s2))

    def sample(self, num_samples, seed=None, observed=False):
        """ ``num_samples`` x n independent draws from the marginals."""
        rng = Util.rng(seed)
        return self.mean + self.std(observed) * rng.standard_normal((num_samples, self.mean.size))


class Adam(SpecPrinter):
    """ Adam ascent steps on a gradient vector.

    >>> opt = Adam(lr=.1); Util.round(opt.step(np.array([2., -0.5])), 6)
    [0.1, -0.1]
    >>> Adam(lr=0.).step(np.ones(3)).tolist()
    [0.0, 0.0, 0.0]
    """
    def __init__(self, lr=0.05, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__()
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self._m = self._v = None

    def step(self, grad):
        g = np.asarray(grad, dtype=float)
        if self._m is None: self._m, self._v = np.zeros_like(g), np.zeros_like(g)
        self.t += 1
        self._m = self.beta1 * self._m + (1 - self.beta1) * g
        self._v = self.beta2 * self._v + (1 - self.beta2) * g * g
        mhat = self._m / (1 - self.beta1 ** self.t)
        vhat = self._v / (1 - self.beta2 ** self.t)
        return self.lr * mhat / (np.sqrt(vhat) + self.eps)


class GaussianProcess(SpecPrinter):
    """ Base class of streaming Gaussian-process regressors.

    Holds the kernel, its hyperparameters and a :class:`FitSpec` with intermediate results, and
    implements hyperparameter learning shared by the subclasses: the objective is the marginal
    log-likelihood plus the kernel's log-prior, differentiated by central finite differences
    in log-space, and ascended with Adam.

    Subclasses implement ``init_state``, ``condition``, ``marginal_log_likelihood``, ``predict``,
    ``posterior_cov`` and ``fantasy_variance``.

    :Authors:
        wiski developers
    """
    fd_step = 1e-4
    hyper_names = ('lengthscale', 'outputscale', 'noise')

    def __init__(self, kernel=None, params=None, trainable=hyper_names, print_precision=9):
        super().__init__(print_precision=print_precision)
        self.kernel = Kernel('RBF', 1) if kernel is None else kernel
        self.params = KernelParams.default(self.kernel.dims) if params is None else params.copy()
        if self.params.d != self.kernel.dims:
            raise DimensionError(str(self.params.d) + ' lengthscales for a ' + str(self.kernel.dims) + '-d kernel')
        self.trainable = tuple(trainable)
        self._optimizer = None
        self.reset()

    @property
    def n(self):
        raise NotImplementedError

    def reset(self):
        """ Erase calculated values (fit diagnostics, optimizer state, caches derived from hyperparameters).

        Returns
        -------
        self : GaussianProcess
        """
        self.fit_spec = FitSpec(print_precision=self.print_precision)
        self._optimizer = None
        self._invalidate()
        return self

    def _invalidate(self):
        pass

    def update(self, **kwargs):
        """ Updates current model's settings (``params=``, ``kernel=``, ...) and drops derived caches.

        Returns
        -------
        self : GaussianProcess
        """
        for K, v in kwargs.items():
            if v is not None: setattr(self, K, v)
        self._invalidate()
        return self

    def set_params(self, params):
        self.params = params
        self._invalidate()
        return self

    def clone(self):
        """ Independent deep copy; conditioning the copy leaves this model untouched."""
        return copy.deepcopy(self)

    def mll(self, params=None):
        return self.marginal_log_likelihood(params)

    def objective(self, params=None):
        p = self.params if params is None else params
        return self.marginal_log_likelihood(p) + self.kernel.log_prior(p)

    def _mask(self):
        d = self.params.d
        return np.concatenate([np.full(d, 'lengthscale' in self.trainable),
                               ['outputscale' in self.trainable, 'noise' in self.trainable]]).astype(bool)

    def grad(self, params=None):
        """ Central finite-difference gradient of :meth:`objective` over log-hyperparameters (0 for frozen ones).

        The streaming and the dense SKI objectives give the same gradient:

        >>> from wiski.Wiski import Wiski; from wiski.ExactGP import DenseSKI
        >>> rng = np.random.default_rng(3); g = Grid.default(1, 32); k = Kernel('RBF', 1)
        >>> p = KernelParams([np.log(.3)], 0., np.log(.05)); X = rng.uniform(-1, 1, (50, 1)); y = np.sin(3 * X[:, 0])
        >>> gw = Wiski(g, k, p, jitter=1e-10).init_state(X, y).grad(); gd = DenseSKI(g, k, p).init_state(X, y).grad()
        >>> np.allclose(gw, gd, rtol=1e-3, atol=1e-3)
        True
        >>> frozen = DenseSKI(g, k, p, trainable=('lengthscale',)).init_state(X, y).grad(); float(frozen[1]), float(frozen[2])
        (0.0, 0.0)
        """
        p = self.params if params is None else params
        theta, d = p.vector(), p.d
        g = np.zeros_like(theta)
        for i in np.flatnonzero(self._mask()):
            e = np.zeros_like(theta); e[i] = self.fd_step
            up = self.objective(KernelParams.from_vector(theta + e, d))
            dn = self.objective(KernelParams.from_vector(theta - e, d))
            g[i] = (up - dn) / (2 * self.fd_step)
        return g

    def hyper_step(self, optimizer=None, lr=None):
        """ One Adam ascent step on the hyperparameters.

        A non-finite objective at a perturbed point skips the step with a ``UserWarning``,
        recorded as ``fit_spec.hyper_step_warning``.

        Parameters
        ----------
        optimizer : Adam, optional
            Optimizer state; defaults to one kept on the model.
        lr : float, optional
            Overrides the optimizer's learning rate.

        Returns
        -------
        self : GaussianProcess

        Examples
        --------
        >>> from wiski.ExactGP import ExactGP
        >>> X = np.linspace(-1, 1, 30)[:, None]; y = np.sin(3 * X[:, 0]) + .1 * np.random.default_rng(0).standard_normal(30)
        >>> gp = ExactGP(Kernel('RBF', 1), KernelParams([np.log(.2)], 0., np.log(.5))).init_state(X, y)
        >>> theta = gp.params.vector(); _ = gp.hyper_step(lr=0.)
        >>> bool(np.array_equal(gp.params.vector(), theta)), gp.fit_spec.hyper_steps
        (True, 1)
        >>> start = gp.mll(); opt = Adam(lr=.05)
        >>> for _ in range(20): _ = gp.hyper_step(opt)
        >>> bool(gp.mll() > start)
        True
        >>> ExactGP(Kernel('RBF', 1)).init_state([[0.]], [1.]).hyper_step()
        Traceback (most recent call last):
        ...
        wiski.Util.InvalidState: hyperparameter step needs at least 2 observations, have 1
        """
        if self.n < 2: raise InvalidState('hyperparameter step needs at least 2 observations, have ' + str(self.n))
        if optimizer is None:
            if self._optimizer is None: self._optimizer = Adam()
            optimizer = self._optimizer
        if lr is not None: optimizer.lr = lr

        try:
            g = self.grad()
            ok = np.all(np.isfinite(g))
        except NumericalBreakdown:
            ok = False
        if not ok:
            msg = 'non-finite objective near log-hyperparameters ' + str(Util.round(self.params.vector(), 4)) + '; step skipped'
            warnings.warn(msg, UserWarning)
            self.fit_spec.add(hyper_step_warning=msg, hyper_steps_skipped=getattr(self.fit_spec, 'hyper_steps_skipped', 0) + 1)
            return self

        theta = self.params.vector() + optimizer.step(g) * self._mask()
        self.set_params(KernelParams.from_vector(theta, self.params.d))
        self.fit_spec.add(hyper_steps=getattr(self.fit_spec, 'hyper_steps', 0) + 1)
        return self

    def fit(self, steps=50, lr=0.05, tol=None):
        """ Up to ``steps`` hyperparameter steps with a fresh Adam; stops early once the relative
        change of the objective is at most ``tol``.

        Returns
        -------
        self : GaussianProcess
        """
        opt = Adam(lr=lr)
        prev = self.objective()
        taken = 0
        for taken in range(1, steps + 1):
            self.hyper_step(opt)
            cur = self.objective()
            if tol is not None and abs(cur - prev) <= tol * max(abs(prev), 1.): break
            prev = cur
        self.fit_spec.add(fit_steps=taken, objective=float(self.objective()))
        return self

    # interface implemented by subclasses
    def init_state(self, X, y):
        raise NotImplementedError

    def condition(self, x, y):
        raise NotImplementedError

    def marginal_log_likelihood(self, params=None):
        raise NotImplementedError

    def predict(self, X):
        raise NotImplementedError

    def posterior_cov(self, XA, XB=None):
        raise NotImplementedError

    def fantasy_variance(self, X_fantasy, X_query):
        raise NotImplementedError
