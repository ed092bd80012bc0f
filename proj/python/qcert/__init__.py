from ._qcert import *  # noqa: F401,F403
from ._qcert import __doc__  # noqa: F401
