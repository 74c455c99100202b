"""Direct synthesis of transformer-based mm-wave matching networks.

Thin python layer over the C++ core: analytic circuit surrogate,
deterministic dataset generation, the shared-encoder synthesis model,
baselines, and checkpoint I/O.
"""

from ._matchsyn import *  # noqa: F401,F403
from ._matchsyn import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
