import numpy as np
import scipy.special

try: from wiski.Wiski import *
except ImportError: from Wiski import *
try: from wiski.ExactGP import *
except ImportError: from ExactGP import *


def dirichlet_transform(label, num_classes, alpha_eps=0.01):
    r""" Regression targets and fixed noise variances of one label, one pair per class.

    :math:`\alpha_c = 1\{label = c\} + \alpha_\epsilon`, :math:`\tilde\sigma_c^2 = \log(1 + 1/\alpha_c)`,
    :math:`\tilde y_c = \log \alpha_c - \tilde\sigma_c^2 / 2`.

    Examples
    --------
    >>> y, s2 = dirichlet_transform(0, 2)
    >>> Util.round(s2, 4), Util.round(y, 4)
    ([0.6882, 4.6151], [-0.3341, -6.9127])
    >>> y, _ = dirichlet_transform(1, 3, alpha_eps=1e8); bool(np.ptp(y) < 1e-6)
    True
    >>> dirichlet_transform(2, 2)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: label 2 is not a class id in [0, 2)
    """
    if not alpha_eps > 0: raise InvalidArgument('alpha_eps must be positive, got ' + str(alpha_eps))
    if int(label) != label or not 0 <= label < num_classes:
        raise InvalidArgument('label ' + str(label) + ' is not a class id in [0, ' + str(num_classes) + ')')
    alpha = np.full(num_classes, float(alpha_eps))
    alpha[int(label)] += 1.
    s2 = np.log1p(1. / alpha)
    return np.log(alpha) - s2 / 2, s2


class DirichletClassifier(SpecPrinter):
    """ Multi-class classifier from independent heteroscedastic regression heads on Dirichlet-transformed labels.

    The predicted class is the argmax of the head means; class probabilities average a softmax
    over ``num_samples`` joint draws from the heads' latent marginals.

    Parameters
    ----------
    num_classes : int
    head_factory : callable, optional
        ``head_factory(c)`` returns a fresh head for class ``c``: a :class:`HeteroWiski` (default,
        on a 25-node-per-dimension grid) or an :class:`ExactGP` with fixed noise.
    dims : int
        Input dimension for the default heads.
    alpha_eps : float

    Examples
    --------
    >>> rng = np.random.default_rng(0); centers = np.array([[-.5, -.5], [.5, .5]])
    >>> labels = rng.integers(0, 2, 120); X = centers[labels] + .15 * rng.standard_normal((120, 2))
    >>> clf = DirichletClassifier(2, dims=2).init_state(X[:20], labels[:20])
    >>> for x, c in zip(X[20:100], labels[20:100]): _ = clf.condition(x, c)
    >>> clf.n, bool(np.mean(clf.predict(X[100:]) == labels[100:]) >= .95)
    (100, True)
    >>> P = clf.predict_proba(X[100:105], seed=0); P.shape, np.allclose(P.sum(axis=1), 1.)
    ((5, 2), True)
    >>> clf.condition(X[0], 3)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: label 3 is not a class id in [0, 2)

    Exact heads with per-point noise give the same decisions here:

    >>> exact = DirichletClassifier(2, head_factory=lambda c: ExactGP(Kernel('RBF', 2), noise=[])).init_state(X[:100], labels[:100])
    >>> bool(np.mean(exact.predict(X[100:]) == clf.predict(X[100:])) >= .95)
    True

    :Authors:
        wiski developers
    """
    def __init__(self, num_classes=2, head_factory=None, dims=1, alpha_eps=0.01, num_samples=256, print_precision=9):
        super().__init__(print_precision=print_precision)
        if int(num_classes) != num_classes or num_classes < 1: raise InvalidArgument('num_classes must be a positive integer')
        self.num_classes, self.alpha_eps, self.num_samples = int(num_classes), float(alpha_eps), int(num_samples)
        if head_factory is None:
            grid = Grid.default(dims, 25)
            head_factory = lambda c: HeteroWiski(grid, Kernel('RBF', dims))
        self.heads = [head_factory(c) for c in range(self.num_classes)]

    @property
    def n(self):
        return self.heads[0].n

    def _targets(self, labels):
        pairs = [dirichlet_transform(c, self.num_classes, self.alpha_eps) for c in np.atleast_1d(labels)]
        Y = np.array([p[0] for p in pairs]).reshape(-1, self.num_classes)
        S = np.array([p[1] for p in pairs]).reshape(-1, self.num_classes)
        return Y, S

    def init_state(self, X, labels):
        Y, S = self._targets(labels)
        for c, head in enumerate(self.heads): head.init_state(X, Y[:, c], S[:, c])
        return self

    def condition(self, x, label):
        """ Conditions every head on ``x`` with its transformed target and noise."""
        Y, S = self._targets([label])
        for c, head in enumerate(self.heads): head.condition(x, Y[0, c], S[0, c])
        return self

    def hyper_step(self, lr=None):
        for head in self.heads:
            if head.n >= 2: head.hyper_step(lr=lr)
        return self

    def fit(self, steps=50, lr=0.05, tol=None):
        for head in self.heads: head.fit(steps, lr, tol)
        return self

    def latent(self, X):
        """ Per-class latent means and variances, each ``n x num_classes``."""
        posts = [head.predict(X) for head in self.heads]
        return np.column_stack([p.mean for p in posts]), np.column_stack([p.variance for p in posts])

    def predict(self, X):
        mean, _ = self.latent(X)
        return np.argmax(mean, axis=1)

    def predict_proba(self, X, num_samples=None, seed=None):
        mean, var = self.latent(X)
        k = self.num_samples if num_samples is None else int(num_samples)
        F = mean + np.sqrt(var) * Util.rng(seed).standard_normal((k,) + mean.shape)
        return scipy.special.softmax(F, axis=2).mean(axis=0)
