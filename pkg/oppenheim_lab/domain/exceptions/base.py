class DomainError(Exception):
    """Root of every lab error; the CLI turns subclasses into exit codes."""
