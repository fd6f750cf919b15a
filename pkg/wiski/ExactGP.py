import warnings
import numpy as np
import scipy.linalg

try: from wiski.GaussianProcess import *
except ImportError: from GaussianProcess import *


class ExactGP(GaussianProcess):
    r""" Exact Gaussian process refit from scratch on every observation, :math:`O(n^3)` per step.

    The noise is the likelihood hyperparameter, or a fixed per-point vector ``noise``.
    The covariance is factored with a jitter ladder ``0, 1e-8, 1e-6, 1e-4``; the jitter used is
    kept in ``fit_spec.jitter``.

    Examples
    --------
    >>> gp = ExactGP(Kernel('RBF', 1)).init_state([[0.]], [0.])
    >>> round(float(gp.mll()), 6), round(float(-0.5 * np.log(2 * np.pi * 1.1)), 6)
    (-0.966594, -0.966594)
    >>> p = KernelParams([np.log(.5)], 0., np.log(1e-6))
    >>> gp = ExactGP(Kernel('RBF', 1), p).init_state([[-.5], [.5]], [1., -1.])
    >>> Util.round(gp.predict([[-.5], [.5]]).mean, 4)
    [1.0, -1.0]
    >>> bool(np.all(gp.predict([[-.5], [.5]]).variance < 1e-5))
    True
    >>> _ = gp.condition([0.], 2.); gp.n
    3

    Coincident inputs with vanishing noise need jitter:

    >>> twin = ExactGP(Kernel('RBF', 1), noise=[1e-300, 1e-300])
    >>> with warnings.catch_warnings(record=True) as w:
    ...     warnings.simplefilter('always')
    ...     _ = twin.init_state([[0.], [0.]], [1., 1.]).mll()
    >>> twin.fit_spec.jitter, len(w) > 0
    (1e-08, True)
    >>> ExactGP().mll()
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidState: marginal log-likelihood needs at least one observation

    The likelihood prefers the noise level the data were drawn with:

    >>> rng = np.random.default_rng(1); X = rng.uniform(-1, 1, (40, 1)); y = np.sin(3 * X[:, 0]) + .1 * rng.standard_normal(40)
    >>> gp = ExactGP(Kernel('RBF', 1), KernelParams([np.log(.3)], 0., np.log(.01))).init_state(X, y)
    >>> far = KernelParams([np.log(.3)], 0., np.log(4.)); bool(gp.mll(far) < gp.mll())
    True

    Appending a point and refitting equals fitting all points at once:

    >>> grown = ExactGP(Kernel('RBF', 1), gp.params).init_state(X[:39], y[:39]).condition(X[39], y[39])
    >>> bool(np.isclose(grown.mll(), gp.mll())), np.allclose(grown.predict(X[:5]).mean, gp.predict(X[:5]).mean)
    (True, True)

    Far from the data the prediction is the prior:

    >>> pf = gp.predict([[50.]]); abs(float(pf.mean[0])) < 1e-12, bool(np.isclose(pf.variance[0], 1.))
    (True, True)

    Dense SKI on grid nodes is the exact GP; off the nodes it converges as the grid refines:

    >>> g = Grid.default(1, 11); nodes = g.points()[[3, 5, 7]]; yn = [.2, -.4, .1]
    >>> ski = DenseSKI(g, gp.kernel, gp.params).init_state(nodes, yn); ex = ExactGP(gp.kernel, gp.params).init_state(nodes, yn)
    >>> bool(np.isclose(ski.mll(), ex.mll())), np.allclose(ski.predict(nodes).variance, ex.predict(nodes).variance, atol=1e-8)
    (True, True)
    >>> err = [abs(DenseSKI(Grid.default(1, s), gp.kernel, gp.params).init_state(X, y).mll() - gp.mll()) for s in (11, 41)]
    >>> bool(err[1] < err[0])
    True

    :Authors:
        wiski developers
    """
    jitter_ladder = (0., 1e-8, 1e-6, 1e-4)

    def __init__(self, kernel=None, params=None, noise=None, trainable=GaussianProcess.hyper_names, print_precision=9):
        self.fixed_noise = None if noise is None else self._check_noise(noise)
        if self.fixed_noise is not None: trainable = tuple(t for t in trainable if t != 'noise')
        super().__init__(kernel, params, trainable, print_precision)
        self.X, self.y = np.zeros((0, self.kernel.dims)), np.zeros(0)

    @staticmethod
    def _check_noise(noise):
        noise = np.atleast_1d(np.asarray(noise, dtype=float))
        if np.any(~(noise > 0)): raise InvalidArgument('noise variance must be positive, got ' + str(noise.min()))
        return noise

    @property
    def n(self):
        return self.y.size

    def _invalidate(self):
        self._factors = {}

    def _cov(self, params, XA, XB=None):
        return self.kernel.matrix(params, XA, XB)

    def _prior_diag(self, params, X):
        return self.kernel.diag(params, X.shape[0])

    def _noise(self, params):
        return np.full(self.n, params.noise) if self.fixed_noise is None else self.fixed_noise

    def _factor(self, params):
        key = tuple(params.vector())
        if key in self._factors: return self._factors[key]
        K = self._cov(params, self.X) + np.diag(self._noise(params))
        for jit in self.jitter_ladder:
            try:
                cho = scipy.linalg.cho_factor(K + jit * np.eye(self.n), lower=True)
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise NotPSDError('covariance is not PD even with jitter ' + str(self.jitter_ladder[-1]))
        if jit > 0: warnings.warn('covariance needed jitter ' + str(jit), UserWarning)
        self.fit_spec.add(jitter=jit)
        self._factors = {key: (cho, scipy.linalg.cho_solve(cho, self.y))}
        return self._factors[key]

    def init_state(self, X, y, noise=None):
        """ Replaces the data with ``(X, y)`` (and per-point ``noise`` when the model has fixed noise)."""
        self.X = Util.as_points(X, self.kernel.dims).copy()
        self.y = np.atleast_1d(np.asarray(y, dtype=float)).copy()
        if self.X.shape[0] != self.y.size: raise DimensionError(str(self.X.shape[0]) + ' points but ' + str(self.y.size) + ' targets')
        if noise is not None: self.fixed_noise = self._check_noise(noise)
        if self.fixed_noise is not None and self.fixed_noise.size != self.y.size:
            self.fixed_noise = np.broadcast_to(self.fixed_noise, self.y.shape).copy()
        self._invalidate()
        return self

    def condition(self, x, y, noise=None):
        """ Appends one observation and refits on the next query."""
        self.X = np.vstack([self.X, Util.as_points(x, self.kernel.dims)[:1]])
        self.y = np.append(self.y, float(y))
        if self.fixed_noise is not None:
            self.fixed_noise = np.append(self.fixed_noise, self._check_noise(self.params.noise if noise is None else noise))
        self._invalidate()
        return self

    def marginal_log_likelihood(self, params=None):
        if self.n == 0: raise InvalidState('marginal log-likelihood needs at least one observation')
        p = self.params if params is None else params
        cho, alpha = self._factor(p)
        return float(-0.5 * self.y @ alpha - np.sum(np.log(np.diag(cho[0]))) - 0.5 * self.n * np.log(2 * np.pi))

    def _obs_noise(self):
        return self.params.noise if self.fixed_noise is None else 0.

    def predict(self, X):
        X = Util.as_points(X, self.kernel.dims)
        prior = self._prior_diag(self.params, X)
        if self.n == 0: return PosteriorGaussian(np.zeros(X.shape[0]), prior, self._obs_noise())
        cho, alpha = self._factor(self.params)
        Ks = self._cov(self.params, X, self.X)
        V = scipy.linalg.solve_triangular(cho[0], Ks.T, lower=True)
        return PosteriorGaussian(Ks @ alpha, prior - np.sum(V * V, axis=0), self._obs_noise())

    def posterior_cov(self, XA, XB=None):
        XA = Util.as_points(XA, self.kernel.dims)
        XB = XA if XB is None else Util.as_points(XB, self.kernel.dims)
        prior = self._cov(self.params, XA, XB)
        if self.n == 0: return prior
        cho, _ = self._factor(self.params)
        VA = scipy.linalg.solve_triangular(cho[0], self._cov(self.params, XA, self.X).T, lower=True)
        VB = scipy.linalg.solve_triangular(cho[0], self._cov(self.params, XB, self.X).T, lower=True)
        return prior - VA.T @ VB

    def fantasy_variance(self, X_fantasy, X_query):
        """ Latent variances at ``X_query`` after adding ``X_fantasy`` with likelihood noise; ``self`` is unchanged.

        >>> gp = ExactGP(Kernel('RBF', 1)).init_state([[-.5]], [1.]); base = gp.predict([[.5]]).variance
        >>> bool(gp.fantasy_variance([[.5]], [[.5]])[0] < base[0]), gp.n
        (True, 1)
        """
        other = self.clone()
        for x in Util.as_points(X_fantasy, self.kernel.dims): other.condition(x, 0.)
        return other.predict(X_query).variance


class DenseSKI(ExactGP):
    r""" Dense SKI reference: an :class:`ExactGP` whose covariance is :math:`W K_{UU} W^\top`.

    Costs :math:`O(n^3)` and serves as the numerical oracle for :class:`Wiski`.

    >>> g = Grid([-1, 1], 11); X = np.linspace(-.9, .9, 7)[:, None]
    >>> ski = DenseSKI(g, Kernel('RBF', 1)).init_state(X, np.sin(X[:, 0]))
    >>> exact = ExactGP(Kernel('RBF', 1)).init_state(X, np.sin(X[:, 0]))
    >>> nodes = g.points()
    >>> np.allclose(ski._cov(ski.params, nodes), exact._cov(exact.params, nodes))
    True
    """
    def __init__(self, grid, kernel=None, params=None, noise=None, trainable=GaussianProcess.hyper_names, print_precision=9):
        self.grid = grid
        super().__init__(Kernel('RBF', grid.d) if kernel is None else kernel, params, noise, trainable, print_precision)

    def _cov(self, params, XA, XB=None):
        K = self.kernel.kuu_operator(params, self.grid)
        WA = self.grid.interp_matrix(XA)
        WB = WA if XB is None else self.grid.interp_matrix(XB)
        return np.asarray(WA @ K.matvec(WB.T.toarray()))

    def _prior_diag(self, params, X):
        W = self.grid.interp_matrix(X)
        KW = self.kernel.kuu_operator(params, self.grid).matvec(W.T.toarray())
        return np.asarray(W.multiply(KW.T).sum(axis=1)).ravel()


def dense_ski_oracle(grid, kernel, params, X, y, X_test, noise=None):
    """ Marginal log-likelihood and predictive marginals of dense SKI on ``(X, y)``.

    >>> g = Grid.default(1, 16); X = np.array([[-.4], [.1], [.6]]); y = np.array([.3, -.2, .5])
    >>> mll, post = dense_ski_oracle(g, Kernel('RBF', 1), KernelParams(), X, y, [[0.]])
    >>> bool(np.isfinite(mll)), post.mean.shape
    (True, (1,))
    """
    model = DenseSKI(grid, kernel, params, noise).init_state(X, y)
    return model.mll(), model.predict(X_test)
