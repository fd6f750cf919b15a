import warnings
import numpy as np
import scipy.sparse

try: from wiski.Util import *
except ImportError: from Util import *


def cubic_convolution(s):
    r""" Keys cubic convolution kernel with :math:`a = -1/2`.

    Examples
    --------
    >>> cubic_convolution(np.array([0., 0.5, 1., 1.5, 2., 3.])).tolist()
    [1.0, 0.5625, 0.0, -0.0625, 0.0, 0.0]
    """
    s = np.abs(s)
    s2, s3 = s * s, s * s * s
    near = 1.5 * s3 - 2.5 * s2 + 1.
    far = -0.5 * s3 + 2.5 * s2 - 4. * s + 2.
    return np.where(s <= 1., near, np.where(s < 2., far, 0.))


class SparseWeights(SpecPrinter):
    """ Interpolation vector :math:`w(x)`: ``4**d`` (flat grid index, weight) pairs.

    Examples
    --------
    >>> w = SparseWeights([2, 3, 4, 5], [-0.0625, 0.5625, 0.5625, -0.0625], m=8)
    >>> w.dot(np.arange(8.))
    3.5
    >>> w.dot(np.ones(8))
    1.0
    >>> w.to_dense().tolist()
    [0.0, 0.0, -0.0625, 0.5625, 0.5625, -0.0625, 0.0, 0.0]
    >>> acc = np.zeros(8); _ = w.scatter_add(acc, 0.); acc.tolist() == [0.] * 8
    True
    >>> SparseWeights([0], [1.], m=8).scatter_add(np.zeros(8), 2.5).tolist()
    [2.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

    :Authors:
        wiski developers
    """
    def __init__(self, indices, values, m):
        self.indices = np.asarray(indices, dtype=np.intp)
        self.values = np.asarray(values, dtype=float)
        self.m = int(m)
        assert self.indices.shape == self.values.shape, 'indices and values differ in shape'

    def __len__(self):
        return self.indices.size

    def dot(self, v):
        """ :math:`w^\\top v` in :math:`O(4^d)`; ``v`` may be an :math:`m \\times k` block."""
        v = np.asarray(v, dtype=float)
        assert v.shape[0] == self.m, 'vector length ' + str(v.shape[0]) + ' != m=' + str(self.m)
        out = self.values @ v[self.indices]
        return float(out) if np.ndim(out) == 0 else out

    def scatter_add(self, target, scale=1.):
        """ ``target[indices] += scale * values`` (in place); returns ``target``."""
        vals = self.values * scale if np.ndim(scale) == 0 else np.outer(self.values, scale)
        np.add.at(target, self.indices, vals)
        return target

    def to_dense(self):
        return np.bincount(self.indices, weights=self.values, minlength=self.m)


class Grid(SpecPrinter):
    r""" Regular grid of inducing points with per-dimension bounds and node counts.

    Flat node indices are row-major, last dimension fastest, matching
    ``KroneckerToeplitzOperator``. Interpolation is cubic convolution over 4 nodes per
    dimension; node indices falling one step outside the grid are mirrored back inside.

    Examples
    --------
    >>> g = Grid([-1.2, 1.2], 25); Util.round(g.spacing, 12), g.m
    ([0.1], 25)
    >>> Grid([(-1, 1), (-1, 1)], (30, 30)).m
    900
    >>> Grid([0, 3], 4).nodes[0].tolist()
    [0.0, 1.0, 2.0, 3.0]
    >>> Grid([0, 3], 3)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: grid needs at least 4 nodes per dimension, got (3,)
    >>> Grid([0, 3], 4)
    Grid
    bounds:
    - - 0.0
      - 3.0
    d: 1
    m: 4
    sizes:
    - 4
    spacing:
    - 1.0

    :Authors:
        wiski developers
    """
    def __init__(self, bounds=(-1.2, 1.2), sizes=25, print_precision=9):
        super().__init__(print_precision=print_precision)
        b = np.asarray(bounds, dtype=float)
        if b.ndim == 1: b = b.reshape(1, 2)
        sizes = Util.promote(sizes, length=b.shape[0])
        if b.shape[0] == 1 and len(sizes) > 1: b = np.repeat(b, len(sizes), axis=0)
        if b.shape != (len(sizes), 2): raise DimensionError('bounds of shape ' + str(b.shape) + ' do not match ' + str(len(sizes)) + ' dimensions')
        if any(int(p) != p or p < 4 for p in sizes):
            raise InvalidArgument('grid needs at least 4 nodes per dimension, got ' + str(tuple(sizes)))
        if not np.all(np.isfinite(b)) or np.any(b[:, 1] <= b[:, 0]):
            raise InvalidArgument('grid bounds must be finite with lower < upper, got ' + str(b.tolist()))

        self.bounds = b
        self.sizes = tuple(int(p) for p in sizes)
        self.d = len(self.sizes)
        self.m = int(np.prod(self.sizes))
        self.spacing = (b[:, 1] - b[:, 0]) / (np.array(self.sizes) - 1.)
        self._strides = np.array([int(np.prod(self.sizes[i + 1:])) for i in range(self.d)], dtype=np.intp)

    @classmethod
    def default(cls, d=1, size=25):
        """ Grid covering :math:`[-1.2, 1.2]^d`, so every input scaled to :math:`[-1, 1]^d` is interior."""
        return cls([(-1.2, 1.2)] * d, Util.promote(size, length=d))

    @property
    def nodes(self):
        return [np.linspace(lo, hi, p) for (lo, hi), p in zip(self.bounds, self.sizes)]

    def points(self):
        """ All ``m`` grid nodes as an :math:`m \\times d` array in flat-index order."""
        mesh = np.meshgrid(*self.nodes, indexing='ij')
        return np.stack([a.ravel() for a in mesh], axis=1)

    def to_dict(self):
        return {'bounds': self.bounds.tolist(), 'sizes': list(self.sizes)}

    def _interp(self, X):
        """ Vectorized weights: flat indices and values, each :math:`n \\times 4^d`."""
        X = Util.as_points(X, self.d)
        if not np.all(np.isfinite(X)): raise InvalidArgument('interpolation point has non-finite coordinates')

        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        out = (X < lo) | (X > hi)
        if np.any(out):
            warnings.warn(str(int(np.any(out, axis=1).sum())) + ' point(s) outside grid bounds clamped to the boundary', UserWarning)
            X = np.clip(X, lo, hi)

        p = np.array(self.sizes)
        u = (X - lo) / self.spacing                         # continuous node coordinate
        r = np.round(u)
        u = np.where(np.abs(u - r) < 1e-10, r, u)           # snap to nodes
        i0 = np.minimum(np.floor(u), p - 2).astype(np.intp)
        taps = i0[:, :, None] + np.arange(-1, 3)            # n x d x 4
        w = cubic_convolution(u[:, :, None] - taps)
        taps = np.where(taps < 0, -taps, taps)              # mirror -1 -> 1
        taps = np.where(taps > p[None, :, None] - 1, 2 * (p[None, :, None] - 1) - taps, taps)   # mirror p -> p-2

        n = X.shape[0]
        idx, val = taps[:, 0, :] * self._strides[0], w[:, 0, :]
        for k in range(1, self.d):
            idx = (idx[:, :, None] + taps[:, k, None, :] * self._strides[k]).reshape(n, -1)
            val = (val[:, :, None] * w[:, k, None, :]).reshape(n, -1)
        return idx, val

    def interp_weights(self, x):
        """ :class:`SparseWeights` of a single point ``x``.

        Examples
        --------
        Interior node and midpoint between interior nodes:

        >>> g = Grid([0, 5], 6)
        >>> g.interp_weights(2.).to_dense().tolist()
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
        >>> w = g.interp_weights(2.5); w.indices.tolist(), w.values.tolist()
        ([1, 2, 3, 4], [-0.0625, 0.5625, 0.5625, -0.0625])

        Two dimensions, midpoint in both, is the outer product of the 1-D quadruple:

        >>> g2 = Grid([(0, 5), (0, 5)], (6, 6)); w2 = g2.interp_weights([2.5, 2.5])
        >>> len(w2), Util.round(w2.values.sum(), 12)
        (16, 1.0)
        >>> np.allclose(w2.values.reshape(4, 4), np.outer(w.values, w.values))
        True

        Edge cells are mirrored and still sum to one:

        >>> Util.round(g.interp_weights(0.3).values.sum(), 12), Util.round(g.interp_weights(4.9).values.sum(), 12)
        (1.0, 1.0)
        >>> with warnings.catch_warnings():
        ...     warnings.simplefilter('ignore')
        ...     g.interp_weights(7.).to_dense().tolist()
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]
        >>> g.interp_weights(float('nan'))
        Traceback (most recent call last):
        ...
        wiski.Util.InvalidArgument: interpolation point has non-finite coordinates
        """
        idx, val = self._interp(Util.as_points(x, self.d)[:1])
        return SparseWeights(idx[0], val[0], self.m)

    def interp_weights_many(self, X):
        idx, val = self._interp(X)
        return [SparseWeights(i, v, self.m) for i, v in zip(idx, val)]

    def interp_matrix(self, X):
        """ Sparse :math:`n \\times m` interpolation matrix ``W`` (duplicate taps summed).

        Examples
        --------
        >>> g = Grid([(-1, 1), (-1, 1)], (5, 6)); X = np.random.default_rng(0).uniform(-1, 1, (40, 2))
        >>> W = g.interp_matrix(X); W.shape
        (40, 30)
        >>> np.allclose(np.asarray(W.sum(axis=1)).ravel(), 1., atol=1e-12)
        True

        Streaming ``scatter_add`` of ``y * w`` accumulates the dense :math:`W^\\top y`:

        >>> y = np.random.default_rng(1).standard_normal(40); acc = np.zeros(g.m)
        >>> for x, yi in zip(X, y): _ = g.interp_weights(x).scatter_add(acc, yi)
        >>> np.allclose(acc, W.T @ y, rtol=1e-12, atol=1e-12)
        True
        >>> v = np.arange(30.); np.allclose([g.interp_weights(x).dot(v) for x in X], W @ v)
        True
        """
        X = Util.as_points(X, self.d)
        idx, val = self._interp(X)
        n = X.shape[0]
        rows = np.repeat(np.arange(n), idx.shape[1])
        return scipy.sparse.coo_matrix((val.ravel(), (rows, idx.ravel())), shape=(n, self.m)).tocsr()
