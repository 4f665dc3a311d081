"""Material-based visual object tracking in hyperspectral video."""

from hypertrack._core import *  # noqa: F401,F403
from hypertrack._core import __doc__  # noqa: F401

__version__ = "0.1.0"
