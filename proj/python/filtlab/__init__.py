from ._filtlab import *  # noqa: F401,F403
from ._filtlab import __version__  # noqa: F401
