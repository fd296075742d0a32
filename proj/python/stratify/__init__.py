"""Joint stratification and minimum sample allocation under CV constraints."""

from ._stratify import *  # noqa: F401,F403
from ._stratify import StratifyError, run  # noqa: F401
