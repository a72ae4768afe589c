from ._rwsmc import *  # noqa: F401,F403
from ._rwsmc import __doc__  # noqa: F401
