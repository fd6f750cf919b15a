import re
import yaml
import numbers
import numpy as np
import scipy.sparse
import scipy.sparse.linalg


class WiskiError(Exception):
    """ Base class of all errors raised by ``wiski``."""


class DimensionError(WiskiError, ValueError):
    """ Operand shapes do not agree."""


class InvalidArgument(WiskiError, ValueError):
    """ An argument is out of its admissible range (zero probe, grid size < 4, ...)."""


class InvalidState(WiskiError, RuntimeError):
    """ The model is not in a state where the operation is defined (e.g. MLL with no data)."""


class NumericalBreakdown(WiskiError, ArithmeticError):
    """ Non-finite values or loss of definiteness during an iterative or factorization routine."""


class NotPSDError(NumericalBreakdown):
    """ A matrix expected to be positive (semi-)definite is not."""


class DataError(WiskiError, ValueError):
    """ Malformed input data. ``row`` and ``column`` locate the offending cell, when known."""

    def __init__(self, msg, row=None, column=None):
        super().__init__(msg)
        self.row, self.column = row, column


class Util():
    """ A collection of utility functions, most of which are static methods,
    i.e. can be called as ``Util.is_iterable()``.

    :Authors:
        wiski developers
    """
    @staticmethod
    def is_iterable(x):
        """ Checks if ``x`` is iterable (strings excluded).

        Examples
        --------
        >>> Util.is_iterable(1)
        False
        >>> Util.is_iterable((1, 2, 3))
        True
        >>> Util.is_iterable('grid')
        False
        """
        if isinstance(x, str): return False
        try:
            iter(x)
            return True
        except TypeError: return False

    @staticmethod
    def is_number(x):
        """ Checks if ``x`` is a real number (numpy scalars included, booleans excluded).

        >>> [Util.is_number(1), Util.is_number(2.5), Util.is_number(np.float64(1)), Util.is_number('1')]
        [True, True, True, False]
        """
        return isinstance(x, numbers.Real) and not isinstance(x, bool)

    @staticmethod
    def promote(x, length=1):
        """ Promotes a number or singleton to tuple of desired length.

        If ``x`` is an iterable of length > 1, it's not replicated and retains its size.
        Used to broadcast per-dimension settings (grid sizes, bounds, lengthscales).

        Examples
        --------
        >>> Util.promote(30, length=2)
        (30, 30)
        >>> Util.promote((25,), length=3)
        (25, 25, 25)
        >>> Util.promote([4, 5, 6], length=3)
        (4, 5, 6)
        >>> Util.promote((-1.2, 1.2), length=2)
        (-1.2, 1.2)
        """
        if Util.is_number(x): x = [x]
        x = list(x)
        if len(x) == 1 and length > 1: x = x * length
        return tuple(x)

    @staticmethod
    def as_points(X, d=None):
        """ Coerces a point or a collection of points to a 2-D float array of shape ``(n, d)``.

        A flat input is read as a single point when ``d`` is ``None`` or equals its length,
        otherwise as ``n`` one-dimensional points.

        Examples
        --------
        >>> Util.as_points([0.5, 0.25]).shape
        (1, 2)
        >>> Util.as_points([0.5, 0.25, 0.1], d=1).shape
        (3, 1)
        >>> Util.as_points(0.3).tolist()
        [[0.3]]
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 0: X = X.reshape(1, 1)
        elif X.ndim == 1:
            X = X.reshape(1, -1) if (d is None or X.size == d) else X.reshape(-1, 1)
        if X.ndim != 2: raise DimensionError('points must be a vector or an (n, d) array, got shape ' + str(X.shape))
        if d is not None and X.shape[1] != d:
            raise DimensionError('points have ' + str(X.shape[1]) + ' columns, expected ' + str(d))
        return X

    @staticmethod
    def as_matvec(A):
        """ Wraps a linear map (callable, dense array, sparse matrix or ``LinearOperator``) as a function ``v -> A v``.

        Examples
        --------
        >>> mv = Util.as_matvec(np.diag([1., 2.]));  mv(np.ones(2)).tolist()
        [1.0, 2.0]
        >>> Util.as_matvec(lambda v: 3 * v)(np.ones(2)).tolist()
        [3.0, 3.0]
        """
        if isinstance(A, np.ndarray): return lambda v: A @ v
        if scipy.sparse.issparse(A): return lambda v: A @ v
        if isinstance(A, scipy.sparse.linalg.LinearOperator): return lambda v: A @ v
        if hasattr(A, 'matvec'): return A.matvec
        if callable(A): return A
        raise InvalidArgument('cannot interpret ' + type(A).__name__ + ' as a linear map')

    @staticmethod
    def rng(seed=None):
        """ Returns a ``numpy.random.Generator``; an existing generator is passed through unchanged.

        >>> bool(Util.rng(0).integers(10) == Util.rng(0).integers(10))
        True
        """
        if isinstance(seed, np.random.Generator): return seed
        return np.random.default_rng(seed)

    @staticmethod
    def round(x, prec=5):
        """ Rounds a number or (nested) iterable to plain Python floats, for printing.

        >>> Util.round((1/3, [np.float64(1/7), 2]), 3)
        (0.333, [0.143, 2])
        """
        if isinstance(x, np.ndarray): return (np.round(x, prec) + 0.).tolist()     # + 0. drops signed zeros
        if isinstance(x, np.generic): x = x.item()
        if isinstance(x, bool) or isinstance(x, numbers.Integral): return x
        if isinstance(x, numbers.Real): return round(float(x), prec) + 0.
        return type(x)(Util.round(y, prec) for y in x)


class SpecPrinter:
    r""" Helper class for printing class's internal variables.

    This is a base class that is inherited by any child class that needs to display its specifications.
    Public attributes are dumped as YAML; floats are rounded to ``print_precision``,
    short arrays are shown as lists and long arrays are summarized by their shape.

    Examples
    --------
    >>> class A(SpecPrinter):
    ...     def __init__(self, **kwargs):
    ...        self.a = [1/17, 1/19]; self.b = None; self.c = {'x': 1/7, 'y': 'bla'}; self.z = np.zeros(100)
    ...        super().__init__(**kwargs)
    >>> A()
    A
    a:
    - 0.058823529
    - 0.052631579
    c:
      x: 0.142857143
      y: bla
    z: ndarray(100)

    >>> A(print_precision=3).full_spec(print_as_line=True)
    'A{a:[0.059, 0.053], c:{x:0.143, y:bla}, z:ndarray(100)}'

    :Authors:
        wiski developers
    """
    max_listed = 16   # arrays with more elements are summarized by shape

    def __init__(self, print_precision=9):
        """ Constructor

        Parameters
        ----------
        print_precision : int, optional
            Sets number of decimal digits to which printed output is rounded.
            If set to ``None``, machine precision is used.
        """
        self._print_precision = print_precision

    @property
    def print_precision(self):
        return getattr(self, '_print_precision', 9)

    @staticmethod
    def _plain(v, p=9):
        # converts numpy/nested objects into YAML-safe python values
        if isinstance(v, SpecPrinter): return {k: SpecPrinter._plain(x, p) for k, x in v._public_vars().items()}
        if isinstance(v, np.ndarray):
            if v.size > SpecPrinter.max_listed: return 'ndarray(' + 'x'.join(str(s) for s in v.shape) + ')'
            return SpecPrinter._plain(v.tolist(), p)
        if scipy.sparse.issparse(v): return type(v).__name__ + '(' + 'x'.join(str(s) for s in v.shape) + ')'
        if isinstance(v, np.generic): v = v.item()
        if isinstance(v, bool) or v is None or isinstance(v, (str, numbers.Integral)): return v
        if isinstance(v, numbers.Real): return float(v) if p is None else round(float(v), p)
        if isinstance(v, dict): return {str(k): SpecPrinter._plain(x, p) for k, x in v.items() if x is not None}
        if Util.is_iterable(v): return [SpecPrinter._plain(x, p) for x in v]
        return type(v).__name__

    def _public_vars(self):
        return {k: v for k, v in sorted(vars(self).items()) if not k.startswith('_') and v is not None}

    def full_spec(self, print_as_line=True):
        r""" Returns a formatted string containing all public variables of this object (recursively)

        Parameters
        ----------
        print_as_line : bool
            If ``True``, key:value pairs are separated by ``,``
            If ``False``, --- by ``\n``

        Returns
        -------
        str
            Formatted string with object specifications
        """
        d = SpecPrinter._plain(self, self.print_precision)
        name = type(self).__name__
        if not d: return name + '{}'

        s = yaml.safe_dump(d, default_flow_style=print_as_line, width=1000, sort_keys=True)
        if print_as_line:
            s = s.strip().replace(': ', ':')
            s = re.sub(r'(\s){2,}', ' ', s)    # replace successive spaces with one instance
            return name + s
        return (name + '\n' + s).strip()

    def __repr__(self):
        return self.full_spec(print_as_line=False)

    def __str__(self):
        return self.full_spec(print_as_line=False)
