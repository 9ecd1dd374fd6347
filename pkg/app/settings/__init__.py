from .base import *
from .experiment import *
