""" Streaming SKI Gaussian processes through the Woodbury identity.
User can use    'from wiski import *'   to access underlying classes.
"""

from wiski.Util import *
from wiski.LinearOperators import *
from wiski.Grid import *
from wiski.Kernels import *
from wiski.GaussianProcess import *

from wiski.Wiski import *
from wiski.ExactGP import *
from wiski.Dirichlet import *

from wiski.Objectives import *
from wiski.Streaming import *
from wiski.Acquisition import *
from wiski.Cli import *
