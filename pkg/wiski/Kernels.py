import numpy as np
import scipy.stats
from scipy.spatial.distance import cdist

try: from wiski.LinearOperators import *
except ImportError: from LinearOperators import *
try: from wiski.Grid import *
except ImportError: from Grid import *


class KernelParams(SpecPrinter):
    """ Kernel and likelihood hyperparameters, stored in log-space.

    Parameters
    ----------
    log_lengthscales : float or array_like
        One log-lengthscale per input dimension (ARD).
    log_outputscale : float
        Log of the kernel amplitude :math:`s`.
    log_noise : float
        Log of the Gaussian likelihood variance :math:`\\sigma^2`.

    Examples
    --------
    >>> KernelParams.default(2)
    KernelParams
    log_lengthscales:
    - -0.693147181
    - -0.693147181
    log_noise: -2.302585093
    log_outputscale: 0.0
    >>> p = KernelParams([0., 1.], 0.5, -1.); p.vector().tolist()
    [0.0, 1.0, 0.5, -1.0]
    >>> KernelParams.from_vector([0., 1., 0.5, -1.], d=2).full_spec()
    'KernelParams{log_lengthscales:[0.0, 1.0], log_noise:-1.0, log_outputscale:0.5}'
    >>> KernelParams([float('inf')], 0., 0.)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: kernel hyperparameters must be finite

    :Authors:
        wiski developers
    """
    def __init__(self, log_lengthscales=np.log(0.5), log_outputscale=0., log_noise=np.log(0.1), print_precision=9):
        super().__init__(print_precision=print_precision)
        self.log_lengthscales = np.atleast_1d(np.asarray(log_lengthscales, dtype=float)).copy()
        self.log_outputscale = float(log_outputscale)
        self.log_noise = float(log_noise)
        if not np.all(np.isfinite(self.vector())): raise InvalidArgument('kernel hyperparameters must be finite')

    @classmethod
    def default(cls, d=1):
        return cls(np.full(d, np.log(0.5)), 0., np.log(0.1))

    @classmethod
    def from_vector(cls, v, d):
        v = np.asarray(v, dtype=float)
        return cls(v[:d], v[d], v[d + 1])

    @property
    def d(self):
        return self.log_lengthscales.size

    @property
    def lengthscales(self):
        return np.exp(self.log_lengthscales)

    @property
    def outputscale(self):
        return float(np.exp(self.log_outputscale))

    @property
    def noise(self):
        return float(np.exp(self.log_noise))

    def vector(self):
        return np.concatenate([self.log_lengthscales, [self.log_outputscale, self.log_noise]])

    def copy(self):
        return KernelParams(self.log_lengthscales, self.log_outputscale, self.log_noise, self.print_precision)

    def update(self, **kwargs):
        """ Returns a copy with the given fields replaced (``log_noise=...`` etc.)."""
        p = self.copy()
        for K, v in kwargs.items():
            if v is not None: setattr(p, K, np.atleast_1d(np.asarray(v, float)).copy() if K == 'log_lengthscales' else float(v))
        return p


class Kernel(SpecPrinter):
    r""" Stationary kernel separable across dimensions: ``RBF`` or ``Matern12`` (product of exponentials).

    * RBF: :math:`s \exp(-\frac12 \sum_i (x_i - z_i)^2 / \ell_i^2)`
    * Matern12: :math:`s \exp(-\sum_i |x_i - z_i| / \ell_i)`

    Optional Gamma priors ``(concentration, rate)`` on lengthscales and outputscale enter
    the training objective through :meth:`log_prior`.

    Examples
    --------
    >>> p = KernelParams([0.], 0., np.log(.1))
    >>> round(float(Kernel('RBF', 1).matrix(p, [[0.]], [[1.]])[0, 0]), 5)
    0.60653
    >>> p3 = KernelParams([np.log(2.)], np.log(3.), np.log(.1))
    >>> round(float(Kernel('Matern12', 1).matrix(p3, [[0.]], [[2.]])[0, 0]), 5)
    1.10364
    >>> X = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    >>> np.allclose(np.diag(Kernel('rbf', 2).matrix(KernelParams([0., 0.], np.log(2.), 0.), X)), 2.)
    True

    Increasing a lengthscale never decreases an off-diagonal RBF entry:

    >>> k = Kernel('RBF', 2); K1 = k.matrix(KernelParams([0., 0.]), X); K2 = k.matrix(KernelParams([.5, 0.]), X)
    >>> bool(np.all(K2 >= K1 - 1e-15))
    True

    >>> Kernel('periodic', 1)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: unknown kernel family periodic; use RBF or Matern12

    :Authors:
        wiski developers
    """
    families = {'rbf': 'RBF', 'matern12': 'Matern12', 'matern-1/2': 'Matern12', 'matern0.5': 'Matern12'}

    def __init__(self, family='RBF', dims=1, lengthscale_prior=None, outputscale_prior=None, print_precision=9):
        super().__init__(print_precision=print_precision)
        key = str(family).lower()
        if key not in self.families: raise InvalidArgument('unknown kernel family ' + str(family) + '; use RBF or Matern12')
        self.family = self.families[key]
        self.dims = int(dims)
        self.lengthscale_prior = None if lengthscale_prior is None else tuple(lengthscale_prior)
        self.outputscale_prior = None if outputscale_prior is None else tuple(outputscale_prior)

    def _profile(self, r):
        # 1-D correlation at scaled lag r (RBF takes squared lags)
        return np.exp(-0.5 * r) if self.family == 'RBF' else np.exp(-r)

    def matrix(self, params, X, Z=None):
        """ Dense kernel matrix :math:`K_{XZ}` (``Z`` defaults to ``X``)."""
        ls = params.lengthscales
        X = Util.as_points(X, self.dims) / ls
        Z = X if Z is None else Util.as_points(Z, self.dims) / ls
        metric = 'sqeuclidean' if self.family == 'RBF' else 'cityblock'
        return params.outputscale * self._profile(cdist(X, Z, metric))

    def diag(self, params, n):
        return np.full(n, params.outputscale)

    def lag_column(self, params, dim, grid):
        """ Unit-amplitude kernel along dimension ``dim`` at grid lags :math:`0, h, 2h, \\ldots`."""
        lags = np.arange(grid.sizes[dim]) * grid.spacing[dim] / params.lengthscales[dim]
        return self._profile(lags ** 2 if self.family == 'RBF' else lags)

    def kuu_operator(self, params, grid):
        r""" :math:`K_{UU}` on ``grid`` as a Kronecker product of Toeplitz factors; outputscale folded into the first.

        Examples
        --------
        >>> g = Grid([-1, 1], 9); k = Kernel('Matern12', 1); p = KernelParams([np.log(.3)], .2)
        >>> np.allclose(k.kuu_operator(p, g).dense(), k.matrix(p, g.points()), rtol=1e-12, atol=1e-12)
        True
        >>> g2 = Grid([(-1, 1), (0, 2)], (4, 4)); k2 = Kernel('RBF', 2); p2 = KernelParams([np.log(.7), 0.], .3)
        >>> np.allclose(k2.kuu_operator(p2, g2).dense(), k2.matrix(p2, g2.points()), rtol=1e-12, atol=1e-12)
        True
        >>> v = np.ones(16); K1 = k2.kuu_operator(p2, g2).matvec(v)
        >>> np.allclose(k2.kuu_operator(p2.update(log_outputscale=.3 + np.log(2)), g2).matvec(v), 2 * K1)
        True
        """
        if grid.d != self.dims: raise DimensionError('grid has ' + str(grid.d) + ' dimensions, kernel ' + str(self.dims))
        cols = [self.lag_column(params, i, grid) for i in range(grid.d)]
        cols[0] = params.outputscale * cols[0]
        return KroneckerToeplitzOperator([ToeplitzOperator(c) for c in cols])

    def log_prior(self, params):
        r""" Gamma log-densities of the configured priors (rate convention, scale = 1/rate); 0 without priors.

        >>> k = Kernel('Matern12', 2, lengthscale_prior=(3., 6.), outputscale_prior=(2., .15))
        >>> p = KernelParams(np.log([.5, .5]), np.log(2.))
        >>> want = 2 * scipy.stats.gamma.logpdf(.5, 3., scale=1/6.) + scipy.stats.gamma.logpdf(2., 2., scale=1/.15)
        >>> bool(np.isclose(k.log_prior(p), want))
        True
        >>> Kernel('RBF', 1).log_prior(KernelParams())
        0.0
        """
        lp = 0.
        if self.lengthscale_prior is not None:
            a, b = self.lengthscale_prior
            lp += float(np.sum(scipy.stats.gamma.logpdf(params.lengthscales, a, scale=1. / b)))
        if self.outputscale_prior is not None:
            a, b = self.outputscale_prior
            lp += float(scipy.stats.gamma.logpdf(params.outputscale, a, scale=1. / b))
        return lp
