__version__ = "1.0.1"
__author__ = "proxid developers"

from .exceptions import *  # noqa
from .generics import *  # noqa
from .identification import identify, proximal_identify, reduce_policy_query  # noqa
from .models import *  # noqa
from .parsers import *  # noqa
