from .base import DomainError
from .custom_exceptions import *
