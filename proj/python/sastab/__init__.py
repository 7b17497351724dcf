"""Step-size-scaled stochastic approximation toolkit."""

from ._sastab import *  # noqa: F401,F403
from ._sastab import __doc__  # noqa: F401

__version__ = "0.1.0"
