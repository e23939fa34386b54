"""Littlewood-Paley frames, Triebel-Lizorkin norms, almost diagonal operator
matrices and T1-type decompositions on a periodic grid."""
from .errors import *  # noqa: F401,F403
from .field import *  # noqa: F401,F403
from .lattice import *  # noqa: F401,F403
from .lp import *  # noqa: F401,F403
from .transform import *  # noqa: F401,F403
from .spaces import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .matrix import *  # noqa: F401,F403
from .almost_diag import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .t1 import *  # noqa: F401,F403
from .config import RunConfig, load_config  # noqa: F401

__version__ = "0.1.0"
