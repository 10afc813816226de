"""History-map tracking and global HD-map evaluation toolkit."""

from ._histmap import *  # noqa: F401,F403
from ._histmap import __version__  # noqa: F401
