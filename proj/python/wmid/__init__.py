"""Python bindings for the wmid watermark identification toolkit."""

from ._wmid import *  # noqa: F401,F403
from ._wmid import __version__  # noqa: F401
