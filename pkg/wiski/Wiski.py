import warnings
import yaml
import numpy as np
import scipy.linalg

try: from wiski.GaussianProcess import *
except ImportError: from GaussianProcess import *


class QFactor(SpecPrinter):
    r""" Factorization of :math:`Q = I_r + \sigma^{-2} L^\top K_{UU} L` with :math:`\log|Q|`.

    ``solver='cholesky'`` factors the dense :math:`r \times r` matrix (one jitter retry on failure);
    ``solver='cg'`` never forms ``Q``: solves run ``cg_steps`` CG iterations and :math:`\log|Q|`
    comes from stochastic Lanczos quadrature. The variance cache
    :math:`S = K_{UU} L C^{-\top}` (``C`` the Cholesky factor) is built on first use.

    :Authors:
        wiski developers
    """
    def __init__(self, kuu, root, s2=1., jitter=1e-6, solver='cholesky', cg_steps=None, slq_probes=30):
        self.solver, self.s2, self.rank = solver, float(s2), root.rank
        self._L = root.L
        self._KL = kuu.matvec(root.L)                           # m x r
        self._S = None

        if solver == 'cholesky':
            Q = np.eye(self.rank) + (root.L.T @ self._KL) / self.s2
            Q = 0.5 * (Q + Q.T)
            try:
                self._cho = scipy.linalg.cho_factor(Q, lower=True)
            except np.linalg.LinAlgError:
                warnings.warn('Q is not numerically SPD; retrying with jitter ' + str(jitter), UserWarning)
                try:
                    self._cho = scipy.linalg.cho_factor(Q + jitter * np.eye(self.rank), lower=True)
                except np.linalg.LinAlgError:
                    raise NotPSDError('Q factorization failed after jitter ' + str(jitter))
                self.jitter_warning = 'added jitter ' + str(jitter)
            self.logdet = float(2 * np.sum(np.log(np.diag(self._cho[0]))))
        elif solver == 'cg':
            self.cg_steps = self.rank if cg_steps is None else int(cg_steps)
            self._krylov = Krylov(self._q_matvec, self.rank)
            self.logdet = self._krylov.slq_logdet(num_probes=slq_probes, steps=self.cg_steps, seed=0)
        else:
            raise InvalidArgument('unknown Q solver ' + str(solver) + '; use cholesky or cg')

    def _q_matvec(self, v):
        return v + self._KL.T @ (self._L @ v) / self.s2

    def solve(self, b):
        if self.solver == 'cholesky': return scipy.linalg.cho_solve(self._cho, b)
        if b.ndim == 1: return self._krylov.cg(b, tol=1e-10, max_iter=self.cg_steps)
        return np.column_stack([self._krylov.cg(c, tol=1e-10, max_iter=self.cg_steps) for c in b.T])

    @property
    def KL(self):
        return self._KL

    @property
    def S(self):
        if self._S is None:
            assert self.solver == 'cholesky', 'variance cache needs a Cholesky factor'
            self._S = scipy.linalg.solve_triangular(self._cho[0], self._KL.T, lower=True).T
        return self._S


class ProjectionMap(SpecPrinter):
    r""" Learned input map :math:`h(x; \phi) = \tanh(Ax + b)` into :math:`(-1, 1)^{d'}`.

    >>> P = ProjectionMap(3, 2, seed=0); P(np.ones((4, 3))).shape, P.phi.size
    ((4, 2), 8)
    >>> bool(np.all(np.abs(P(100 * np.ones((1, 3)))) <= 1))
    True
    >>> P2 = P.with_phi(np.zeros(8)); P2(np.ones(3)).tolist()
    [[0.0, 0.0]]
    """
    def __init__(self, in_dim, out_dim, A=None, b=None, seed=None):
        self.in_dim, self.out_dim = int(in_dim), int(out_dim)
        rng = Util.rng(seed)
        self.A = rng.standard_normal((self.out_dim, self.in_dim)) / np.sqrt(self.in_dim) if A is None else np.asarray(A, float)
        self.b = np.zeros(self.out_dim) if b is None else np.asarray(b, float)

    def __call__(self, X):
        X = Util.as_points(X, self.in_dim)
        return np.tanh(X @ self.A.T + self.b)

    @property
    def phi(self):
        return np.concatenate([self.A.ravel(), self.b])

    def with_phi(self, phi):
        phi = np.asarray(phi, float)
        k = self.out_dim * self.in_dim
        return ProjectionMap(self.in_dim, self.out_dim, phi[:k].reshape(self.out_dim, self.in_dim), phi[k:])


class Wiski(GaussianProcess):
    r""" Streaming SKI Gaussian process through the Woodbury identity (WISKI).

    The state is constant-size: :math:`W^\top y`, :math:`y^\top y`, a root :math:`LL^\top` of
    :math:`W^\top W + \epsilon I` with pseudo-inverse root ``J``, and ``n``. Every posterior
    quantity is routed through :math:`M = (\sigma^2 K_{UU}^{-1} + W^\top W)^{-1}`, applied with a
    single solve against the small matrix ``Q``; conditioning on a new point is a rank-one root
    update, so neither cost nor memory grows with ``n``.

    Parameters
    ----------
    grid : Grid
        Inducing grid; inputs (after ``projection``) are expected in :math:`[-1, 1]^d`.
    kernel : Kernel, optional
        Separable stationary kernel, RBF by default.
    params : KernelParams, optional
        Log-hyperparameters; defaults to lengthscale 0.5, outputscale 1, noise 0.1.
    rank : int, optional
        Root rank ``r``; ``m`` when ``m <= 1024``, ``m // 2`` otherwise.
    jitter : float
        :math:`\epsilon` added to :math:`W^\top W` so the root exists from ``n = 0``.
    projection : ProjectionMap, optional
        Learned map from raw inputs to grid coordinates.
    q_solver : {'cholesky', 'cg'}
        Dense factorization of ``Q`` or CG with ``cg_steps`` iterations plus SLQ log-determinant.

    Examples
    --------
    Empty state and a single point on a grid node:

    >>> g = Grid([-1.2, 1.2], 25); model = Wiski(g)
    >>> model.n, float(model.yty), bool(np.allclose(model.root.gram(), 1e-6 * np.eye(25)))
    (0, 0.0, True)
    >>> node = g.points()[12]; _ = model.condition(node, 2.)
    >>> float(model.yty), int(np.flatnonzero(model.wty)[0]), Util.round(model.wty[12], 10)
    (4.0, 12, 2.0)

    MLL of one noiseless-target point on a node is a scalar Gaussian log-density:

    >>> m1 = Wiski(g, jitter=1e-10).init_state(node, [0.])
    >>> round(float(m1.mll()), 6), round(float(-0.5 * np.log(2 * np.pi * (1 + 0.1))), 6)
    (-0.966594, -0.966594)

    Agreement with the dense SKI computation on :math:`\tilde K = W K_{UU} W^\top + \sigma^2 I`:

    >>> from wiski.ExactGP import DenseSKI
    >>> rng = np.random.default_rng(0); k = Kernel('RBF', 1); p = KernelParams([np.log(.3)], 0., np.log(.05))
    >>> g = Grid.default(1, 32); X = rng.uniform(-1, 1, (60, 1)); y = np.sin(3 * X[:, 0]) + .1 * rng.standard_normal(60)
    >>> model = Wiski(g, k, p, jitter=1e-10).init_state(X, y); oracle = DenseSKI(g, k, p).init_state(X, y)
    >>> bool(np.isclose(model.mll(), oracle.mll(), rtol=1e-6))
    True
    >>> Xs = rng.uniform(-1, 1, (10, 1)); a, b = model.predict(Xs), oracle.predict(Xs)
    >>> np.allclose(a.mean, b.mean, rtol=1e-6, atol=1e-8), np.allclose(a.variance, b.variance, rtol=1e-6, atol=1e-8)
    (True, True)
    >>> np.allclose(model.posterior_cov(Xs[:4], Xs[4:]), oracle.posterior_cov(Xs[:4], Xs[4:]), rtol=1e-6, atol=1e-8)
    True

    Two dimensions with a Matern kernel:

    >>> g2 = Grid.default(2, 7); k2 = Kernel('Matern12', 2); p2 = KernelParams([np.log(.6), np.log(.4)], .3, np.log(.1))
    >>> X2 = rng.uniform(-1, 1, (80, 2)); y2 = X2.sum(1) + .2 * rng.standard_normal(80)
    >>> w2 = Wiski(g2, k2, p2, jitter=1e-10).init_state(X2, y2); o2 = DenseSKI(g2, k2, p2).init_state(X2, y2)
    >>> bool(np.isclose(w2.mll(), o2.mll(), rtol=1e-6))
    True
    >>> np.allclose(w2.predict(X2[:5]).variance, o2.predict(X2[:5]).variance, rtol=1e-6, atol=1e-8)
    True

    Streaming one point at a time reproduces the batch caches; stream order does not matter:

    >>> g = Grid.default(1, 20); X = rng.uniform(-1, 1, (100, 1)); y = rng.standard_normal(100)
    >>> batch = Wiski(g).init_state(X, y); stream = Wiski(g); rev = Wiski(g)
    >>> for xi, yi in zip(X, y): _ = stream.condition(xi, yi)
    >>> for xi, yi in zip(X[::-1], y[::-1]): _ = rev.condition(xi, yi)
    >>> G = batch.root.gram(); bool(np.linalg.norm(stream.root.gram() - G) <= 1e-5 * np.linalg.norm(G))
    True
    >>> np.allclose(stream.wty, batch.wty, atol=1e-10), bool(np.isclose(stream.yty, batch.yty))
    (True, True)
    >>> np.allclose(rev.root.gram(), stream.root.gram(), rtol=1e-6, atol=1e-6), np.allclose(rev.wty, stream.wty)
    (True, True)
    >>> np.allclose(stream.predict(X[:20]).mean, batch.predict(X[:20]).mean, rtol=1e-5, atol=1e-5)
    True

    Far from the data the posterior is the prior:

    >>> local = Wiski(Grid.default(1, 64), params=KernelParams([np.log(.1)])).init_state(rng.uniform(-1, -.8, (10, 1)), np.ones(10))
    >>> pf = local.predict(local.grid.points()[60:61]); abs(float(pf.mean[0])) < 1e-3, abs(float(pf.variance[0]) - 1.) < 1e-3
    (True, True)

    Conditioning at a point reduces its posterior variance:

    >>> v0 = float(local.predict([[0.]]).variance[0]); v1 = float(local.clone().condition([0.], 1.).predict([[0.]]).variance[0])
    >>> v1 < v0
    True

    :Authors:
        wiski developers
    """
    snapshot_magic = b'WISKI-SNAPSHOT 1'
    max_full_rank = 1024

    def __init__(self, grid, kernel=None, params=None, rank=None, jitter=1e-6, projection=None,
                 q_solver='cholesky', cg_steps=None, trainable=GaussianProcess.hyper_names, print_precision=9):
        self.grid = grid
        self.rank = (grid.m if grid.m <= self.max_full_rank else grid.m // 2) if rank is None else int(rank)
        if not 1 <= self.rank <= grid.m: raise InvalidArgument('rank=' + str(self.rank) + ' must lie in [1, m=' + str(grid.m) + ']')
        self.jitter = float(jitter)
        self.projection = projection
        if projection is not None and projection.out_dim != grid.d:
            raise DimensionError('projection outputs ' + str(projection.out_dim) + ' dims, grid has ' + str(grid.d))
        if q_solver not in ('cholesky', 'cg'): raise InvalidArgument('unknown Q solver ' + str(q_solver) + '; use cholesky or cg')
        self.q_solver, self.cg_steps = q_solver, cg_steps
        super().__init__(Kernel('RBF', grid.d) if kernel is None else kernel, params, trainable, print_precision)
        if self.kernel.dims != grid.d: raise DimensionError('kernel has ' + str(self.kernel.dims) + ' dims, grid ' + str(grid.d))
        self._clear_data()

    # ------------------------------------------------------------------ state
    def _clear_data(self):
        m = self.grid.m
        self.wty = np.zeros(m)
        self.yty = 0.
        self.log_noise_sum = 0.
        self._n = 0
        self.root = self._initial_root(self.jitter * np.eye(m), empty=True)
        self._invalidate()

    @property
    def n(self):
        return self._n

    @property
    def s2(self):
        """ Likelihood variance entering ``Q`` and ``M``."""
        return self.params.noise

    def _invalidate(self, kernel_changed=True):
        if kernel_changed: self._kuu = {}
        self._qf, self._mean = {}, None

    def _initial_root(self, G, empty=False):
        m, r = self.grid.m, self.rank
        if empty and r == m: return LowRankRoot.scaled_identity(m, self.jitter)
        root = Krylov(G, m).root_decomposition(r)
        if root.rank < r:
            # Lanczos stopped early: complete the range with directions of the jitter eigenspace
            rng = Util.rng(0)
            C = rng.standard_normal((m, r - root.rank))
            Qb, _ = np.linalg.qr(np.column_stack([root.L, C]))
            C = Qb[:, root.rank:]
            root = LowRankRoot(np.column_stack([root.L, np.sqrt(self.jitter) * C]),
                               np.column_stack([root.J, C / np.sqrt(self.jitter)]))
        return root

    def project(self, X):
        if self.projection is None: return Util.as_points(X, self.grid.d)
        return self.projection(X)

    def _W(self, X):
        return self.grid.interp_matrix(self.project(X))

    def init_state(self, X, y):
        r""" Batch initialization: accumulates :math:`W^\top W` densely and root-decomposes it once.

        Returns
        -------
        self : Wiski
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        self._clear_data()
        if y.size == 0: return self
        W = self._W(X)
        if W.shape[0] != y.size: raise DimensionError(str(W.shape[0]) + ' points but ' + str(y.size) + ' targets')
        self._accumulate(W, y, np.ones_like(y))
        return self

    def _accumulate(self, W, y, noise):
        # noise is all ones on the homoscedastic path
        Dinv = 1. / noise
        self.wty = W.T @ (y * Dinv)
        self.yty = float(np.sum(y * y * Dinv))
        self.log_noise_sum = float(np.sum(np.log(noise)))
        G = (W.T @ W.multiply(Dinv[:, None])).toarray() + self.jitter * np.eye(self.grid.m)
        self.root = self._initial_root(G)
        self._n = y.size
        self._invalidate(kernel_changed=False)

    def condition(self, x, y):
        r""" Conditions on one observation: updates :math:`W^\top y`, :math:`y^\top y` and the root in :math:`O(mr)`.

        Returns
        -------
        self : Wiski
        """
        w = self.grid.interp_weights(self.project(x)[0])
        return self._condition_vector(w.to_dense(), float(y))

    def _condition_vector(self, w, y, noise=1.):
        self.wty = self.wty + (y / noise) * w
        self.yty += y * y / noise
        self.log_noise_sum += np.log(noise)
        self.root = self.root.rank_one_update(w / np.sqrt(noise))
        self._n += 1
        self._invalidate(kernel_changed=False)
        return self

    # -------------------------------------------------------------- algebra
    def kuu(self, params=None):
        p = self.params if params is None else params
        key = tuple(p.vector())
        if key not in self._kuu: self._kuu = {key: self.kernel.kuu_operator(p, self.grid)}
        return self._kuu[key]

    def q_factor(self, params=None):
        p = self.params if params is None else params
        key = tuple(p.vector())
        if key not in self._qf:
            qf = QFactor(self.kuu(p), self.root, self._s2_of(p), jitter=self.jitter, solver=self.q_solver, cg_steps=self.cg_steps)
            self._qf = {key: qf}
            if hasattr(qf, 'jitter_warning'): self.fit_spec.add(q_jitter_warning=qf.jitter_warning)
        return self._qf[key]

    def _s2_of(self, params):
        return params.noise

    def apply_m(self, v, params=None):
        r""" :math:`Mv = \sigma^{-2} K v - \sigma^{-2} K L Q^{-1} L^\top \sigma^{-2} K v` (``v`` may be a block).

        Examples
        --------
        >>> g = Grid.default(1, 16); p = KernelParams([np.log(.5)], 0., 0.)
        >>> model = Wiski(g, Kernel('Matern12', 1), p); v = np.random.default_rng(0).standard_normal(16)
        >>> np.allclose(model.apply_m(v), model.kuu().matvec(v), rtol=1e-4, atol=1e-4)
        True
        >>> model.apply_m(np.zeros(16)).tolist() == [0.] * 16
        True
        >>> X = np.random.default_rng(1).uniform(-1, 1, (40, 1)); p2 = KernelParams([np.log(.5)], 0., np.log(.1))
        >>> model = Wiski(g, Kernel('Matern12', 1), p2, jitter=1e-10).init_state(X, np.zeros(40))
        >>> K = model.kuu().dense() + 1e-8 * np.eye(16); W = model.grid.interp_matrix(X).toarray()
        >>> M = np.linalg.inv(.1 * np.linalg.inv(K) + W.T @ W)
        >>> np.allclose(model.apply_m(v), M @ v, rtol=1e-6, atol=1e-6)
        True

        Sherman-Morrison: conditioning on ``w`` changes ``M`` by :math:`-vv^\top / (1 + w^\top v)`:

        >>> w = model.grid.interp_weights(.33).to_dense(); u = model.apply_m(w); before = model.apply_m(v)
        >>> after = model.clone()._condition_vector(w, 0.).apply_m(v)
        >>> np.allclose(after, before - u * (u @ v) / (1 + w @ u), rtol=1e-6, atol=1e-8)
        True

        Woodbury: :math:`(\tilde K + \sigma^2 I)^{-1} z = \sigma^{-2} z - \sigma^{-2} W M W^\top z`:

        >>> z = np.random.default_rng(2).standard_normal(40); Kt = W @ model.kuu().dense() @ W.T + .1 * np.eye(40)
        >>> np.allclose(np.linalg.solve(Kt, z), (z - W @ model.apply_m(W.T @ z)) / .1, rtol=1e-6, atol=1e-6)
        True
        """
        p = self.params if params is None else params
        s2 = self._s2_of(p)
        qf = self.q_factor(p)
        Kv = self.kuu(p).matvec(v)
        corr = qf.KL @ qf.solve(qf.KL.T @ v / s2)
        return (Kv - corr) / s2

    def marginal_log_likelihood(self, params=None):
        r""" Marginal log-likelihood of all data seen so far, in time independent of ``n``.

        :math:`-\frac12 \sigma^{-2}(y^\top y - (W^\top y)^\top M W^\top y) - \frac12(\log|Q| + n\log\sigma^2) - \frac n2 \log 2\pi`.
        """
        if self.n == 0: raise InvalidState('marginal log-likelihood needs at least one observation')
        p = self.params if params is None else params
        s2 = self._s2_of(p)
        qf = self.q_factor(p)
        quad = (self.yty - self.wty @ self.apply_m(self.wty, p)) / s2
        logdet = qf.logdet + self._noise_logdet(p)
        return float(-0.5 * quad - 0.5 * logdet - 0.5 * self.n * np.log(2 * np.pi))

    def _noise_logdet(self, params):
        return self.n * np.log(params.noise)

    def mean_cache(self):
        """ :math:`M W^\\top y`, reused by every prediction until the state changes."""
        if self._mean is None: self._mean = self.apply_m(self.wty)
        return self._mean

    def _latent_variance(self, idx, val, W, qf):
        E = self.kuu().entries(idx[:, :, None], idx[:, None, :])       # n x 4^d x 4^d
        prior = np.einsum('ik,ikl,il->i', val, E, val)
        if qf.solver == 'cholesky':
            SW = W @ qf.S
            return prior - np.sum(SW * SW, axis=1) / qf.s2
        return prior - np.sum((W @ qf.KL) * qf.solve(qf.KL.T @ W.T.toarray()).T, axis=1) / qf.s2

    def predict(self, X):
        r""" Predictive mean :math:`w_*^\top M W^\top y` and latent variance :math:`\sigma^2 w_*^\top M w_*`.

        Returns
        -------
        PosteriorGaussian
            with ``noise`` the likelihood variance.
        """
        Z = self.project(X)
        idx, val = self.grid._interp(Z)
        W = self.grid.interp_matrix(Z)
        mean = W @ self.mean_cache() if self.n > 0 else np.zeros(Z.shape[0])
        var = self._latent_variance(idx, val, W, self.q_factor())
        return PosteriorGaussian(mean, var, noise=self._predict_noise())

    def _predict_noise(self):
        return self.params.noise

    def predict_many(self, X, chunk=2048):
        """ :meth:`predict` in chunks of ``chunk`` points."""
        X = self.project(X) if self.projection is None else X
        parts = [self.predict(X[i:i + chunk]) for i in range(0, len(X), chunk)]
        return PosteriorGaussian(np.concatenate([p.mean for p in parts]), np.concatenate([p.variance for p in parts]),
                                 noise=self._predict_noise())

    def posterior_cov(self, XA, XB=None):
        """ Latent posterior covariance :math:`\\sigma^2 W_A M W_B^\\top`."""
        WA = self._W(XA)
        WB = WA if XB is None else self._W(XB)
        qf = self.q_factor()
        prior = WA @ self.kuu().matvec(WB.T.toarray())
        if qf.solver == 'cholesky':
            return prior - (WA @ qf.S) @ (WB @ qf.S).T / qf.s2
        return prior - (WA @ qf.KL) @ qf.solve(qf.KL.T @ WB.T.toarray()) / qf.s2

    def fantasy_variance(self, X_fantasy, X_query):
        """ Latent variances at ``X_query`` after hypothetically conditioning on ``X_fantasy``; the state is untouched.

        >>> rng = np.random.default_rng(7); g = Grid.default(1, 16)
        >>> model = Wiski(g).init_state(rng.uniform(-1, 1, (8, 1)), rng.standard_normal(8))
        >>> Xq = np.array([[.2], [.5]]); base = model.predict(Xq).variance
        >>> np.allclose(model.fantasy_variance(np.zeros((0, 1)), Xq), base)
        True
        >>> bool(model.fantasy_variance([[.2]], Xq)[0] < base[0]), model.n
        (True, 8)

        Agrees with conditioning a copy on the fantasy point:

        >>> np.allclose(model.fantasy_variance([[.2]], Xq), model.clone().condition([.2], 0.).predict(Xq).variance, rtol=1e-6, atol=1e-9)
        True
        """
        Xf = Util.as_points(X_fantasy, self.projection.in_dim if self.projection else self.grid.d)
        Zq = self.project(X_query)
        idx, val = self.grid._interp(Zq)
        Wq = self.grid.interp_matrix(Zq)
        if Xf.shape[0] == 0: return np.maximum(self._latent_variance(idx, val, Wq, self.q_factor()), 0.)

        Wf = self._W(Xf).toarray().T / np.sqrt(self._fantasy_noise_scale())
        root = self.root.rank_one_update(Wf)
        qf = QFactor(self.kuu(), root, self.s2, jitter=self.jitter, solver=self.q_solver, cg_steps=self.cg_steps)
        return np.maximum(self._latent_variance(idx, val, Wq, qf), 0.)

    def _fantasy_noise_scale(self):
        return 1.

    # ----------------------------------------------------------- projection
    def partial_objective(self, w, y):
        r""" Terms of the MLL after adding observation ``(w, y)`` that depend on ``w``:
        :math:`\frac12 \sigma^{-2}(b^\top M b - g^2/c) - \frac12 \log c`, with
        :math:`b = W^\top y + y w`, :math:`g = w^\top M b`, :math:`c = 1 + w^\top M w`.
        """
        w = np.asarray(w, dtype=float)
        v = self.apply_m(w)
        c = 1. + w @ v
        assert c > 0, '1 + w^T M w must be positive'
        Mb = self.mean_cache() + y * v
        b = self.wty + y * w
        g = w @ Mb
        return float(0.5 * (b @ Mb - g * g / c) / self.s2 - 0.5 * np.log(c))

    def weights_grad(self, w, y):
        r""" Closed-form gradient of :meth:`partial_objective` with respect to the interpolation vector ``w``.

        Examples
        --------
        >>> rng = np.random.default_rng(5); g = Grid.default(2, 8)
        >>> model = Wiski(g, Kernel('RBF', 2), KernelParams([np.log(.4)] * 2)).init_state(rng.uniform(-1, 1, (30, 2)), rng.standard_normal(30))
        >>> w = g.interp_weights([.1, -.3]).to_dense(); y = .7; e = rng.standard_normal(g.m); h = 1e-5
        >>> fd = (model.partial_objective(w + h * e, y) - model.partial_objective(w - h * e, y)) / (2 * h)
        >>> bool(np.isclose(model.weights_grad(w, y) @ e, fd, rtol=1e-4))
        True

        The same directional derivative of the full marginal log-likelihood after conditioning:

        >>> full = lambda u: model.clone()._condition_vector(u, y).mll()
        >>> bool(np.isclose(model.weights_grad(w, y) @ e, (full(w + h * e) - full(w - h * e)) / (2 * h), rtol=1e-4))
        True

        With no data and ``y = 0`` only :math:`-\frac12\log(1 + w^\top M w)` remains:

        >>> empty = Wiski(g, Kernel('RBF', 2)); u = empty.apply_m(w)
        >>> np.allclose(empty.weights_grad(w, 0.), -u / (1 + w @ u))
        True
        """
        w = np.asarray(w, dtype=float)
        v = self.apply_m(w)
        c = 1. + w @ v
        assert c > 0, '1 + w^T M w must be positive'
        Mb = self.mean_cache() + y * v
        g = w @ Mb
        return (y * Mb - g * (Mb + y * v) / c + g * g * v / c ** 2) / self.s2 - v / c

    def projection_grad(self, x, y, h=1e-5):
        """ Gradient of the partial objective over the projection parameters ``phi``, chained through
        central differences of the interpolation weights.

        >>> rng = np.random.default_rng(6); P = ProjectionMap(3, 2, seed=1)
        >>> model = Wiski(Grid.default(2, 10), projection=P).init_state(rng.uniform(-1, 1, (40, 3)), rng.standard_normal(40))
        >>> x, y = rng.uniform(-1, 1, 3), .4; gphi = model.projection_grad(x, y); gphi.shape
        (8,)
        >>> e = rng.standard_normal(8); t = 1e-5
        >>> f = lambda phi: model.partial_objective(model.grid.interp_weights(P.with_phi(phi)(x)[0]).to_dense(), y)
        >>> bool(np.isclose(gphi @ e, (f(P.phi + t * e) - f(P.phi - t * e)) / (2 * t), rtol=1e-3, atol=1e-6))
        True
        """
        if self.projection is None: raise InvalidState('model has no projection')
        P = self.projection
        phi = P.phi
        w = self.grid.interp_weights(P(x)[0]).to_dense()
        gw = self.weights_grad(w, y)
        out = np.zeros_like(phi)
        for i in range(phi.size):
            e = np.zeros_like(phi); e[i] = h
            wp = self.grid.interp_weights(P.with_phi(phi + e)(x)[0]).to_dense()
            wm = self.grid.interp_weights(P.with_phi(phi - e)(x)[0]).to_dense()
            out[i] = gw @ (wp - wm) / (2 * h)
        return out

    def projection_step(self, x, y, lr=5e-3):
        """ One ascent step on ``phi`` from the current (pre-conditioning) state."""
        g = self.projection_grad(x, y)
        if not np.all(np.isfinite(g)):
            warnings.warn('non-finite projection gradient; step skipped', UserWarning)
            return self
        self.projection = self.projection.with_phi(self.projection.phi + lr * g)
        return self

    # -------------------------------------------------------------- snapshot
    def _header(self):
        hdr = {'class': type(self).__name__, 'grid': self.grid.to_dict(),
               'kernel': {'family': self.kernel.family, 'dims': self.kernel.dims,
                          'lengthscale_prior': None if self.kernel.lengthscale_prior is None else list(self.kernel.lengthscale_prior),
                          'outputscale_prior': None if self.kernel.outputscale_prior is None else list(self.kernel.outputscale_prior)},
               'params': self.params.vector().tolist(), 'trainable': list(self.trainable),
               'n': int(self.n), 'yty': float(self.yty), 'log_noise_sum': float(self.log_noise_sum),
               'rank': int(self.root.rank), 'jitter': self.jitter, 'q_solver': self.q_solver, 'cg_steps': self.cg_steps,
               'arrays': {'wty': [self.grid.m], 'L': list(self.root.L.shape), 'J': list(self.root.J.shape)}}
        if self.projection is not None:
            hdr['arrays'].update(proj_A=list(self.projection.A.shape), proj_b=[self.projection.out_dim])
        return hdr

    def save(self, path):
        """ Writes a snapshot: a magic line, a YAML header closed by ``...``, then little-endian float64 arrays.

        >>> import tempfile, os
        >>> rng = np.random.default_rng(8); g = Grid.default(1, 12)
        >>> model = Wiski(g).init_state(rng.uniform(-1, 1, (15, 1)), rng.standard_normal(15))
        >>> path = os.path.join(tempfile.mkdtemp(), 'state.wiski'); _ = model.save(path)
        >>> back = Wiski.load(path); back.n, bool(np.isclose(back.mll(), model.mll()))
        (15, True)
        >>> np.array_equal(back.root.L, model.root.L), np.array_equal(back.wty, model.wty)
        (True, True)
        """
        hdr = yaml.safe_dump(self._header(), explicit_start=False, explicit_end=True, sort_keys=True)
        arrays = [self.wty, self.root.L, self.root.J]
        if self.projection is not None: arrays += [self.projection.A, self.projection.b]
        payload = np.concatenate([np.ravel(a) for a in arrays]).astype('<f8').tobytes()
        with open(path, 'wb') as f:
            f.write(self.snapshot_magic + b'\n')
            f.write(hdr.encode('utf-8'))
            f.write(payload)
        return path

    @staticmethod
    def load(path):
        """ Restores a model written by :meth:`save` (``Wiski`` or ``HeteroWiski``).

        A header that does not parse, or lacks a field, is a :class:`DataError`:

        >>> import tempfile, os
        >>> bad = os.path.join(tempfile.mkdtemp(), 'bad.wiski')
        >>> with open(bad, 'wb') as f: _ = f.write(Wiski.snapshot_magic + b'\\nclass: [Wiski\\n...\\n')
        >>> Wiski.load(bad)
        Traceback (most recent call last):
        ...
        wiski.Util.DataError: malformed snapshot header: ...
        >>> with open(bad, 'wb') as f: _ = f.write(Wiski.snapshot_magic + b'\\nclass: Wiski\\n...\\n')
        >>> Wiski.load(bad)
        Traceback (most recent call last):
        ...
        wiski.Util.DataError: malformed snapshot header: missing field 'arrays'
        """
        with open(path, 'rb') as f: raw = f.read()
        magic, _, rest = raw.partition(b'\n')
        if magic != Wiski.snapshot_magic: raise DataError('not a WISKI snapshot: ' + str(path))
        head, sep, payload = rest.partition(b'\n...\n')
        if not sep: raise DataError('snapshot header is not terminated')
        try:
            return Wiski._restore(yaml.safe_load(head.decode('utf-8')), payload)
        except DataError:
            raise
        except KeyError as e:
            raise DataError('malformed snapshot header: missing field ' + str(e)) from e
        except (yaml.YAMLError, UnicodeDecodeError, TypeError, ValueError, AttributeError) as e:
            raise DataError('malformed snapshot header: ' + str(e).replace('\n', ' ')) from e

    @staticmethod
    def _restore(hdr, payload):
        shapes = hdr['arrays']
        sizes = {k: int(np.prod(s)) for k, s in shapes.items()}
        data = np.frombuffer(payload, dtype='<f8')
        if data.size != sum(sizes.values()):
            raise DataError('snapshot payload has ' + str(data.size) + ' values, header promises ' + str(sum(sizes.values())))
        order = ['wty', 'L', 'J'] + (['proj_A', 'proj_b'] if 'proj_A' in shapes else [])
        arrs, pos = {}, 0
        for k in order:
            arrs[k] = data[pos:pos + sizes[k]].reshape(shapes[k]).copy()
            pos += sizes[k]

        kd = hdr['kernel']
        kernel = Kernel(kd['family'], kd['dims'], kd['lengthscale_prior'], kd['outputscale_prior'])
        grid = Grid(hdr['grid']['bounds'], hdr['grid']['sizes'])
        proj = None
        if 'proj_A' in arrs:
            proj = ProjectionMap(arrs['proj_A'].shape[1], arrs['proj_A'].shape[0], arrs['proj_A'], arrs['proj_b'])
        cls = HeteroWiski if hdr['class'] == 'HeteroWiski' else Wiski
        model = cls(grid, kernel, KernelParams.from_vector(hdr['params'], kd['dims']), rank=hdr['rank'],
                    jitter=hdr['jitter'], projection=proj, q_solver=hdr['q_solver'], cg_steps=hdr['cg_steps'],
                    trainable=hdr['trainable'])
        model.wty, model.yty, model.log_noise_sum, model._n = arrs['wty'], hdr['yty'], hdr['log_noise_sum'], hdr['n']
        model.root = LowRankRoot(arrs['L'], arrs['J'])
        model._invalidate(kernel_changed=False)
        return model


class HeteroWiski(Wiski):
    r""" WISKI with fixed per-observation noise :math:`D = \mathrm{diag}(d_i)`.

    Caches hold :math:`W^\top D^{-1} y`, :math:`y^\top D^{-1} y` and a root of :math:`W^\top D^{-1} W`;
    every formula reuses the homoscedastic path with :math:`\sigma^2 = 1`, and the MLL adds
    :math:`\sum_i \log d_i`. The likelihood noise hyperparameter is not used and not trained.

    Examples
    --------
    Constant noise equal to :math:`\sigma^2` reproduces the homoscedastic posterior:

    >>> rng = np.random.default_rng(9); g = Grid.default(1, 20); p = KernelParams([np.log(.4)], 0., np.log(.2))
    >>> X = rng.uniform(-1, 1, (30, 1)); y = rng.standard_normal(30)
    >>> homo = Wiski(g, params=p, jitter=1e-10).init_state(X, y); het = HeteroWiski(g, params=p, jitter=1e-10).init_state(X, y, np.full(30, .2))
    >>> np.allclose(het.predict(X[:5]).mean, homo.predict(X[:5]).mean, atol=1e-6), bool(np.isclose(het.mll(), homo.mll()))
    (True, True)

    Two points with noise (0.1, 10), against dense :math:`(W K_{UU} W^\top + D)^{-1}` algebra:

    >>> from wiski.ExactGP import DenseSKI
    >>> X2, y2, d2 = np.array([[-.3], [.4]]), np.array([1., -1.]), np.array([.1, 10.])
    >>> het = HeteroWiski(g, params=p, jitter=1e-10)
    >>> for xi, yi, di in zip(X2, y2, d2): _ = het.condition_hetero(xi, yi, di)
    >>> oracle = DenseSKI(g, het.kernel, p, noise=d2).init_state(X2, y2); Xs = np.array([[0.], [.35]])
    >>> np.allclose(het.predict(Xs).mean, oracle.predict(Xs).mean, rtol=1e-6, atol=1e-8), bool(np.isclose(het.mll(), oracle.mll(), rtol=1e-6))
    (True, True)

    A point with huge noise has no influence on the mean:

    >>> one = HeteroWiski(g, params=p).init_state(X2[:1], y2[:1], d2[:1])
    >>> two = HeteroWiski(g, params=p).init_state(X2, y2, np.array([.1, 1e8]))
    >>> np.allclose(one.predict(Xs).mean, two.predict(Xs).mean, atol=1e-6)
    True
    >>> two.condition_hetero([0.], 1., 0.)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: noise variance must be positive, got 0.0
    """
    def __init__(self, grid, kernel=None, params=None, rank=None, jitter=1e-6, projection=None,
                 q_solver='cholesky', cg_steps=None, trainable=('lengthscale', 'outputscale'), print_precision=9):
        super().__init__(grid, kernel, params, rank, jitter, projection, q_solver, cg_steps,
                         tuple(t for t in trainable if t != 'noise'), print_precision)

    @property
    def s2(self):
        return 1.

    def _s2_of(self, params):
        return 1.

    def _noise_logdet(self, params):
        return self.log_noise_sum

    def _predict_noise(self):
        return 0.

    def _fantasy_noise_scale(self):
        return self.params.noise

    def init_state(self, X, y, noise=None):
        """ Batch initialization with per-point noise variances (``params.noise`` for all when omitted)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        self._clear_data()
        if y.size == 0: return self
        noise = np.full(y.size, self.params.noise) if noise is None else np.broadcast_to(np.asarray(noise, float), y.shape).copy()
        if np.any(noise <= 0): raise InvalidArgument('noise variance must be positive, got ' + str(noise.min()))
        W = self._W(X)
        if W.shape[0] != y.size: raise DimensionError(str(W.shape[0]) + ' points but ' + str(y.size) + ' targets')
        self._accumulate(W, y, noise)
        return self

    def condition_hetero(self, x, y, noise_var):
        """ Conditions on ``(x, y)`` observed with fixed noise variance ``noise_var``.

        Returns
        -------
        self : HeteroWiski
        """
        noise_var = float(noise_var)
        if not noise_var > 0: raise InvalidArgument('noise variance must be positive, got ' + str(noise_var))
        w = self.grid.interp_weights(self.project(x)[0])
        return self._condition_vector(w.to_dense(), float(y), noise_var)

    def condition(self, x, y, noise_var=None):
        return self.condition_hetero(x, y, self.params.noise if noise_var is None else noise_var)
