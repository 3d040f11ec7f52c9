# moduli package
from .moduli import *

__all__ = ['moduli']
