import warnings
import functools
import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse.linalg

try: from wiski.Util import *
except ImportError: from Util import *


class SolveSpec(SpecPrinter):
    """ Diagnostics of the last Krylov routine (iterations, residuals, early termination).

    :Authors:
        wiski developers
    """
    method = None

    def __init__(self, print_precision=9, **kwargs):
        super().__init__(print_precision=print_precision)
        self.add(**kwargs)

    def add(self, **kwargs):
        for K, v in kwargs.items():
            if v is not None: setattr(self, K, v)
        return self


class ToeplitzOperator(SpecPrinter):
    r""" Symmetric Toeplitz matrix :math:`T_{ij} = t_{|i-j|}` stored by its first column.

    Products are computed through a circulant embedding of size :math:`2p`
    (zero-padded to ``scipy.fft.next_fast_len``), in :math:`O(p \log p)`.

    Examples
    --------
    Identity Toeplitz:

    >>> Util.round(ToeplitzOperator([1, 0]).matvec([3, 7]), 10)
    [3.0, 7.0]

    Dense multiply of ``[[2, 1], [1, 2]]``:

    >>> Util.round(ToeplitzOperator([2, 1]).matvec([1, 1]), 10)
    [3.0, 3.0]

    Random first column, compared against the dense matrix:

    >>> rng = np.random.default_rng(1)
    >>> T = ToeplitzOperator(rng.standard_normal(64)); v = rng.standard_normal(64)
    >>> np.allclose(T.matvec(v), T.dense() @ v, rtol=1e-10, atol=1e-10)
    True
    >>> V = rng.standard_normal((64, 3))  # column blocks
    >>> np.allclose(T.matvec(V), T.dense() @ V, rtol=1e-10, atol=1e-10)
    True

    >>> ToeplitzOperator([1., 2.]).matvec([1., 2., 3.])
    Traceback (most recent call last):
    ...
    wiski.Util.DimensionError: vector of length 3 does not match Toeplitz size 2

    :Authors:
        wiski developers
    """
    def __init__(self, first_column):
        t = np.asarray(first_column, dtype=float).ravel()
        if t.size < 1: raise InvalidArgument('Toeplitz first column is empty')
        if not np.all(np.isfinite(t)): raise InvalidArgument('Toeplitz first column has non-finite entries')

        self.first_column = t
        self.size = t.size
        self._n_fft = scipy.fft.next_fast_len(2 * t.size, real=True)
        c = np.zeros(self._n_fft)
        c[:t.size] = t
        if t.size > 1: c[-(t.size - 1):] = t[1:][::-1]     # wrap-around half of the circulant
        self._eig = scipy.fft.rfft(c)

    @property
    def shape(self):
        return (self.size, self.size)

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.size:
            raise DimensionError('vector of length ' + str(v.shape[0]) + ' does not match Toeplitz size ' + str(self.size))
        eig = self._eig if v.ndim == 1 else self._eig[:, None]
        out = scipy.fft.irfft(eig * scipy.fft.rfft(v, n=self._n_fft, axis=0), n=self._n_fft, axis=0)
        return out[:self.size]

    def dense(self):
        return scipy.linalg.toeplitz(self.first_column)


class KroneckerToeplitzOperator(SpecPrinter):
    r""" :math:`T_1 \otimes \cdots \otimes T_d`, each :math:`T_i` a :class:`ToeplitzOperator`.

    Flat indices are row-major (last dimension fastest), the ordering of ``numpy.kron``
    and of ``Grid.points()``.

    Examples
    --------
    A single factor is plain Toeplitz multiplication:

    >>> rng = np.random.default_rng(2)
    >>> T = ToeplitzOperator(rng.standard_normal(5)); v = rng.standard_normal(5)
    >>> np.allclose(KroneckerToeplitzOperator([T]).matvec(v), T.matvec(v), rtol=1e-12, atol=1e-12)
    True

    Two 2x2 factors applied to :math:`e_1` give the first column of the dense product:

    >>> K = KroneckerToeplitzOperator([ToeplitzOperator([2, 1]), ToeplitzOperator([3, .5])])
    >>> Util.round(K.matvec([1, 0, 0, 0]), 10)
    [6.0, 1.0, 3.0, 0.5]
    >>> K.dense()[:, 0].tolist()
    [6.0, 1.0, 3.0, 0.5]

    Three factors of size 4:

    >>> K = KroneckerToeplitzOperator([ToeplitzOperator(rng.standard_normal(4)) for _ in range(3)])
    >>> v = rng.standard_normal(64)
    >>> np.allclose(K.matvec(v), K.dense() @ v, rtol=1e-10, atol=1e-10)
    True
    >>> rows, cols = np.array([[0], [17], [63]]), np.array([[5, 17, 40]])
    >>> np.allclose(K.entries(rows, cols), K.dense()[rows, cols], rtol=1e-12, atol=1e-12)
    True

    :Authors:
        wiski developers
    """
    def __init__(self, factors):
        factors = list(factors)
        if len(factors) == 0: raise InvalidArgument('Kronecker operator needs at least one factor')
        self.factors = factors
        self.sizes = tuple(f.size for f in factors)
        self.total_dim = int(np.prod(self.sizes))

    @property
    def shape(self):
        return (self.total_dim, self.total_dim)

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.total_dim:
            raise DimensionError('vector of length ' + str(v.shape[0]) + ' does not match Kronecker size ' + str(self.total_dim))
        if len(self.factors) == 1: return self.factors[0].matvec(v)

        cols = v.shape[1:]
        X = v.reshape(self.sizes + cols)
        for i, f in enumerate(self.factors):
            X = np.moveaxis(X, i, 0)
            shp = X.shape
            X = f.matvec(X.reshape(shp[0], -1)).reshape(shp)
            X = np.moveaxis(X, 0, i)
        return X.reshape(v.shape)

    def diagonal_value(self):
        return float(np.prod([f.first_column[0] for f in self.factors]))

    def entries(self, rows, cols):
        """ Entries :math:`K[rows, cols]` (broadcast) without forming ``K``: product of ``t_d[|i_d - j_d|]``."""
        rows, cols = np.asarray(rows), np.asarray(cols)
        ir, ic = np.unravel_index(rows, self.sizes), np.unravel_index(cols, self.sizes)
        out = 1.
        for f, a, b in zip(self.factors, ir, ic):
            out = out * f.first_column[np.abs(a - b)]
        return out

    def dense(self):
        return functools.reduce(np.kron, [f.dense() for f in self.factors])

    def aslinearoperator(self):
        return scipy.sparse.linalg.LinearOperator(self.shape, matvec=self.matvec, matmat=self.matvec, dtype=float)


class LowRankRoot(SpecPrinter):
    r""" Root :math:`LL^\top` of a PSD matrix with a tracked pseudo-inverse root :math:`JJ^\top`.

    ``J`` satisfies :math:`J^\top L = I_r` when the tracked matrix is full-rank,
    so a new vector :math:`w` in the range of ``L`` is :math:`w = Lp`, :math:`p = J^\top w`.

    Examples
    --------
    >>> R = LowRankRoot(np.eye(2), np.eye(2))
    >>> R.rank_one_update(np.zeros(2)).gram().tolist()
    [[1.0, 0.0], [0.0, 1.0]]
    >>> Util.round(R.rank_one_update([1., 0.]).gram(), 10)
    [[2.0, 0.0], [0.0, 1.0]]

    Recompute-from-scratch check on a random full-rank root:

    >>> rng = np.random.default_rng(3)
    >>> B = rng.standard_normal((32, 32)); A = B @ B.T + np.eye(32)
    >>> R = LowRankRoot.from_cholesky(A); w = rng.standard_normal(32)
    >>> R1 = R.rank_one_update(w)
    >>> np.allclose(R1.gram(), A + np.outer(w, w), rtol=1e-8, atol=1e-8)
    True
    >>> np.allclose(R1.J.T @ R1.L, np.eye(32), atol=1e-6)
    True

    Updates commute at the Gram level, and a block of columns is one batched update:

    >>> w2 = rng.standard_normal(32)
    >>> G12 = R.rank_one_update(w).rank_one_update(w2).gram()
    >>> G21 = R.rank_one_update(w2).rank_one_update(w).gram()
    >>> np.allclose(G12, G21, rtol=1e-8, atol=1e-8)
    True
    >>> np.allclose(R.rank_one_update(np.column_stack([w, w2])).gram(), G12, rtol=1e-8, atol=1e-8)
    True

    :Authors:
        wiski developers
    """
    def __init__(self, L, J):
        L, J = np.atleast_2d(np.asarray(L, dtype=float)), np.atleast_2d(np.asarray(J, dtype=float))
        if L.shape != J.shape: raise DimensionError('root shapes differ: ' + str(L.shape) + ' vs ' + str(J.shape))
        self.L, self.J = L, J

    @property
    def rank(self):
        return self.L.shape[1]

    @property
    def dim(self):
        return self.L.shape[0]

    @classmethod
    def scaled_identity(cls, m, eps=1e-6, rank=None):
        """ Root of :math:`\\epsilon I_m` (first ``rank`` coordinate directions when ``rank < m``)."""
        r = m if rank is None else rank
        E = np.eye(m, r)
        return cls(np.sqrt(eps) * E, E / np.sqrt(eps))

    @classmethod
    def from_cholesky(cls, A):
        C = scipy.linalg.cholesky(np.asarray(A, dtype=float), lower=True)
        return cls(C, scipy.linalg.solve_triangular(C, np.eye(C.shape[0]), lower=True).T)

    def rank_one_update(self, w):
        r""" Returns a new root of :math:`LL^\top + ww^\top` (``w`` may be an :math:`m \times q` block).

        With :math:`p = J^\top w = USV^\top` (thin SVD) and :math:`D = (I + S^2)^{1/2}`,
        :math:`L' = L(I + U(D - I)U^\top)` and :math:`J' = J(I + U(D^{-1} - I)U^\top)`.
        Cost :math:`O(mrq)`.
        """
        w = np.asarray(w, dtype=float)
        if w.shape[0] != self.dim:
            raise DimensionError('update of length ' + str(w.shape[0]) + ' does not match root dim ' + str(self.dim))
        P = self.J.T @ w.reshape(self.dim, -1)
        if not np.any(P): return self.copy()

        U, S, _ = scipy.linalg.svd(P, full_matrices=False)
        D = np.sqrt(S ** 2 + 1.)
        L = self.L + ((self.L @ U) * (D - 1.)) @ U.T
        J = self.J + ((self.J @ U) * (1. / D - 1.)) @ U.T
        return LowRankRoot(L, J)

    def gram(self):
        return self.L @ self.L.T

    def pinv_gram(self):
        return self.J @ self.J.T

    def copy(self):
        return LowRankRoot(self.L.copy(), self.J.copy())


class TridiagonalPair(SpecPrinter):
    """ Lanczos output: orthonormal basis ``Q_basis`` and tridiagonal coefficients ``alpha``, ``beta``.

    :Authors:
        wiski developers
    """
    def __init__(self, Q_basis, alpha, beta):
        self.Q_basis, self.alpha, self.beta = Q_basis, np.asarray(alpha, float), np.asarray(beta, float)

    @property
    def rank(self):
        return self.alpha.size

    def matrix(self):
        return np.diag(self.alpha) + np.diag(self.beta, 1) + np.diag(self.beta, -1)

    def eigh(self):
        if self.rank == 1: return self.alpha.copy(), np.ones((1, 1))
        return scipy.linalg.eigh_tridiagonal(self.alpha, self.beta)


class Krylov(SpecPrinter):
    r""" Matrix-free Krylov routines for a symmetric linear map ``apply_A`` of size ``dim``.

    ``apply_A`` may be a callable, a dense or sparse matrix or any object with ``matvec``.
    Diagnostics of the last call are kept in ``self.spec``.

    Examples
    --------
    Conjugate gradients:

    >>> Util.round(Krylov(np.eye(2)).cg([5., -2.]), 10)
    [5.0, -2.0]
    >>> k = Krylov(np.array([[4., 1.], [1., 3.]])); Util.round(k.cg([1., 2.]), 6)
    [0.090909, 0.636364]
    >>> k.spec.converged, k.spec.iterations
    (True, 2)

    >>> rng = np.random.default_rng(4)
    >>> B = rng.standard_normal((50, 50)); A = B @ B.T + 50 * np.eye(50); b = rng.standard_normal(50)
    >>> np.allclose(Krylov(A).cg(b, tol=1e-10), np.linalg.solve(A, b), rtol=1e-7, atol=1e-8)
    True

    Lanczos:

    >>> tri = Krylov(np.eye(3)).lanczos([1., 2., 3.], 3)
    >>> tri.rank, Util.round(tri.alpha, 10)
    (1, [1.0])
    >>> tri = Krylov(np.diag([1., 2., 3.])).lanczos(np.ones(3), 3)
    >>> Util.round(tri.eigh()[0], 8)
    [1.0, 2.0, 3.0]
    >>> B = rng.standard_normal((32, 32)); A = B @ B.T + np.eye(32)
    >>> tri = Krylov(A).lanczos(rng.standard_normal(32), 32); Q = tri.Q_basis
    >>> np.allclose(Q.T @ Q, np.eye(32), atol=1e-8), np.allclose(Q @ tri.matrix() @ Q.T, A, atol=1e-6)
    (True, True)
    >>> Krylov(A).lanczos(np.zeros(32), 4)
    Traceback (most recent call last):
    ...
    wiski.Util.InvalidArgument: Lanczos probe vector is zero

    Root decompositions:

    >>> Krylov(np.eye(4)).root_decomposition(4).gram().tolist()
    [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    >>> R = Krylov(np.diag([4., 1.])).root_decomposition(2)
    >>> R.gram().tolist(), R.pinv_gram().tolist()
    ([[4.0, 0.0], [0.0, 1.0]], [[0.25, 0.0], [0.0, 1.0]])
    >>> B = rng.standard_normal((64, 64)); A = B @ B.T
    >>> R = Krylov(A).root_decomposition(64)
    >>> bool(np.linalg.norm(R.gram() - A) <= 1e-6 * np.linalg.norm(A))
    True
    >>> B = rng.standard_normal((16, 16)); A = B @ B.T + np.eye(16)
    >>> R = Krylov(A).root_decomposition(16, method='lanczos')
    >>> bool(np.linalg.norm(R.gram() - A) <= 1e-6 * np.linalg.norm(A))
    True

    Stochastic Lanczos quadrature:

    >>> bool(abs(Krylov(np.eye(10)).slq_logdet(num_probes=5, steps=10, seed=0)) < 1e-12)
    True
    >>> bool(abs(Krylov(2 * np.eye(16)).slq_logdet(30, 16, seed=0) - 16 * np.log(2)) < 1e-8)
    True
    >>> V = np.linalg.qr(rng.standard_normal((64, 64)))[0]; lam = rng.uniform(2, 4, 64)
    >>> A = (V * lam) @ V.T
    >>> est = Krylov(A).slq_logdet(num_probes=50, steps=30, seed=0)
    >>> bool(abs(est - np.log(lam).sum()) <= 0.02 * np.log(lam).sum())
    True

    Indefinite matrices and stalled solves:

    >>> indef = Krylov(np.diag([1., -1.]))
    >>> indef.root_decomposition(2)
    Traceback (most recent call last):
    ...
    wiski.Util.NotPSDError: matrix is not PSD: smallest eigenvalue -1.0
    >>> indef.slq_logdet(num_probes=1, steps=1, seed=0)
    Traceback (most recent call last):
    ...
    wiski.Util.NotPSDError: non-positive Ritz value ... in SLQ
    >>> indef.cg(np.array([0., 1.]))
    Traceback (most recent call last):
    ...
    wiski.Util.NumericalBreakdown: CG breakdown at iteration 1: p^T A p = -1.0
    >>> stiff = Krylov(np.diag([1., 10., 100.]))
    >>> with warnings.catch_warnings(record=True) as w:
    ...     warnings.simplefilter('always')
    ...     _ = stiff.cg(np.ones(3), max_iter=1)
    >>> str(w[0].message), stiff.spec.converged
    ('CG did not reach tol=1e-10 in 1 iterations', False)

    :Authors:
        wiski developers
    """
    eig_floor = 1e-10           # relative to the largest eigenvalue
    dense_root_max_dim = 1024
    lanczos_extra_steps = 20

    def __init__(self, apply_A, dim=None):
        if dim is None:
            if not hasattr(apply_A, 'shape'): raise InvalidArgument('dim is required for a callable linear map')
            dim = apply_A.shape[0]
        self.dim = int(dim)
        self._matvec = Util.as_matvec(apply_A)
        self._A = apply_A
        self.spec = SolveSpec()

    def _dense(self):
        if isinstance(self._A, np.ndarray): A = self._A
        else: A = np.column_stack([self._matvec(e) for e in np.eye(self.dim)])
        return 0.5 * (A + A.T)

    def cg(self, b, tol=1e-10, max_iter=None):
        """ Conjugate gradients for :math:`Ax = b` from :math:`x_0 = 0`; stops at ``||Ax - b|| <= tol ||b||``."""
        if tol <= 0: raise InvalidArgument('CG tolerance must be positive')
        b = np.asarray(b, dtype=float)
        if b.shape != (self.dim,): raise DimensionError('right-hand side has shape ' + str(b.shape) + ', expected (' + str(self.dim) + ',)')
        max_iter = self.dim if max_iter is None else max_iter

        x, r = np.zeros(self.dim), b.copy()
        bnorm = np.linalg.norm(b)
        self.spec = SolveSpec(method='cg', iterations=0, residual=0., converged=True)
        if bnorm == 0: return x

        p, rr = r.copy(), r @ r
        for it in range(1, max_iter + 1):
            Ap = self._matvec(p)
            pAp = p @ Ap
            if not np.isfinite(pAp) or pAp <= 0:
                raise NumericalBreakdown('CG breakdown at iteration ' + str(it) + ': p^T A p = ' + str(pAp))
            a = rr / pAp
            x += a * p
            r -= a * Ap
            rr_new = r @ r
            if not np.isfinite(rr_new): raise NumericalBreakdown('CG residual is not finite at iteration ' + str(it))
            self.spec.add(iterations=it, residual=float(np.sqrt(rr_new) / bnorm))
            if np.sqrt(rr_new) <= tol * bnorm: return x
            p = r + (rr_new / rr) * p
            rr = rr_new

        self.spec.converged = False
        warnings.warn('CG did not reach tol=' + str(tol) + ' in ' + str(max_iter) + ' iterations', UserWarning)
        return x

    def lanczos(self, probe, k):
        """ ``k`` Lanczos steps with full reorthogonalization; stops early once ``beta`` underflows."""
        q = np.asarray(probe, dtype=float)
        if q.shape != (self.dim,): raise DimensionError('probe has shape ' + str(q.shape) + ', expected (' + str(self.dim) + ',)')
        if not 1 <= k <= self.dim: raise InvalidArgument('Lanczos steps k=' + str(k) + ' must lie in [1, ' + str(self.dim) + ']')
        qnorm = np.linalg.norm(q)
        if qnorm == 0: raise InvalidArgument('Lanczos probe vector is zero')

        Q = np.zeros((self.dim, k))
        alpha, beta = np.zeros(k), np.zeros(k)
        Q[:, 0] = q / qnorm
        scale = 0.
        for j in range(k):
            v = self._matvec(Q[:, j])
            if not np.all(np.isfinite(v)): raise NumericalBreakdown('non-finite values in Lanczos step ' + str(j))
            alpha[j] = Q[:, j] @ v
            v = v - alpha[j] * Q[:, j] - (beta[j - 1] * Q[:, j - 1] if j > 0 else 0.)
            for _ in range(2):
                v -= Q[:, :j + 1] @ (Q[:, :j + 1].T @ v)
            beta[j] = np.linalg.norm(v)
            scale = max(scale, abs(alpha[j]), beta[j])
            if j == k - 1 or beta[j] <= 1e-10 * scale: break
            Q[:, j + 1] = v / beta[j]

        steps = j + 1
        self.spec = SolveSpec(method='lanczos', iterations=steps, rank=steps, early_stop=steps < k)
        return TridiagonalPair(Q[:, :steps], alpha[:steps], beta[:steps - 1])

    def _root_from_eig(self, evals, V):
        lmax = max(evals.max(), 0.)
        if evals.min() < -1e-8 * max(lmax, 1.):
            raise NotPSDError('matrix is not PSD: smallest eigenvalue ' + str(evals.min()))
        keep = evals > self.eig_floor * lmax
        sq = np.sqrt(np.where(keep, evals, 0.))
        L = V * sq
        J = V * np.where(keep, 1. / np.where(keep, sq, 1.), 0.)
        self.spec.add(floored=int((~keep).sum()))
        return LowRankRoot(L, J)

    def root_decomposition(self, rank=None, method=None, seed=0):
        """ Returns :class:`LowRankRoot` with :math:`LL^\\top \\approx A`.

        ``method`` is ``'cholesky'`` (dense, default when ``rank == dim <= 1024``) or ``'lanczos'``.
        Lanczos runs ``rank + max(rank // 2, lanczos_extra_steps)`` steps (at most ``dim``) and keeps the
        ``rank`` largest Ritz pairs. Eigenvalues below ``eig_floor`` times the largest are excluded from ``J``.

        The truncated root is close to the best rank-``r`` approximation:

        >>> rng = np.random.default_rng(5); V = np.linalg.qr(rng.standard_normal((64, 64)))[0]; lam = .8 ** np.arange(64)
        >>> A = (V * lam) @ V.T; best = np.sqrt(np.sum(lam[16:] ** 2))
        >>> R = Krylov(A).root_decomposition(16, method='lanczos'); R.rank
        16
        >>> bool(np.linalg.norm(R.gram() - A) <= 1.5 * best)
        True
        """
        rank = self.dim if rank is None else int(rank)
        if not 1 <= rank <= self.dim: raise InvalidArgument('rank=' + str(rank) + ' must lie in [1, ' + str(self.dim) + ']')
        if method is None: method = 'cholesky' if (rank == self.dim and self.dim <= self.dense_root_max_dim) else 'lanczos'

        if method == 'cholesky':
            A = self._dense()
            self.spec = SolveSpec(method='cholesky', rank=rank)
            try:
                return LowRankRoot.from_cholesky(A)
            except np.linalg.LinAlgError:
                self.spec.add(method='eigh')     # singular but possibly PSD
                evals, V = scipy.linalg.eigh(A)
                return self._root_from_eig(evals, V)

        if method != 'lanczos': raise InvalidArgument('unknown root method ' + str(method))
        probe = Util.rng(seed).standard_normal(self.dim)
        tri = self.lanczos(probe, min(self.dim, rank + max(rank // 2, self.lanczos_extra_steps)))
        evals, V = tri.eigh()
        top = np.argsort(evals)[::-1][:rank]
        self.spec.add(rank=int(top.size))
        return self._root_from_eig(evals[top], tri.Q_basis @ V[:, top])

    def slq_logdet(self, num_probes=30, steps=30, seed=None):
        r""" Stochastic Lanczos quadrature estimate of :math:`\log|A|` with Rademacher probes."""
        rng = Util.rng(seed)
        steps = min(steps, self.dim)
        est = np.zeros(num_probes)
        for i in range(num_probes):
            z = rng.choice([-1., 1.], size=self.dim)
            tri = self.lanczos(z, steps)
            evals, V = tri.eigh()
            if evals.min() <= 0: raise NotPSDError('non-positive Ritz value ' + str(evals.min()) + ' in SLQ')
            est[i] = self.dim * np.sum(V[0] ** 2 * np.log(evals))

        out = float(est.mean())
        self.spec = SolveSpec(method='slq', num_probes=num_probes, steps=steps, logdet=out,
                              stderr=float(est.std(ddof=1) / np.sqrt(num_probes)) if num_probes > 1 else None)
        return out
