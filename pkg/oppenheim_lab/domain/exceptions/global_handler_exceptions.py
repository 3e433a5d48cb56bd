import logging

from oppenheim_lab.domain.exceptions.base import DomainError
from oppenheim_lab.domain.exceptions.custom_exceptions import (
    AcceptanceError,
    ConfigError,
    ConsistencyError,
    InputError,
    ModelError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ACCEPTANCE = 2

_handlers: dict[type[BaseException], int] = {}


def exception_handler(exc_type: type[BaseException], exit_code: int) -> None:
    _handlers[exc_type] = exit_code


def register_exception_handlers() -> None:
    exception_handler(ConfigError, EXIT_CONFIG)
    exception_handler(InputError, EXIT_CONFIG)
    exception_handler(ModelError, EXIT_CONFIG)
    exception_handler(AcceptanceError, EXIT_ACCEPTANCE)
    exception_handler(ConsistencyError, EXIT_ACCEPTANCE)
    exception_handler(DomainError, EXIT_CONFIG)


def handle_exception(exc: BaseException) -> int:
    """Log ``exc`` and return the exit code registered for its closest type."""
    if not _handlers:
        register_exception_handlers()

    for klass in type(exc).__mro__:
        if klass in _handlers:
            code = _handlers[klass]
            if code == EXIT_ACCEPTANCE:
                logger.error("acceptance check failed: %s", exc)
            else:
                logger.error("%s: %s", klass.__name__, exc)
            return code

    logger.exception("internal error")
    return EXIT_CONFIG
