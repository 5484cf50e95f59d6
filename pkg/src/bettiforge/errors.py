"""Shared exception types."""


class DeskScaleError(Exception):
    """Raised when an exact/simulation path would exceed desk-scale limits.

    The message always reports the offending size so callers can tell what
    blew the budget.  The CLI maps this to exit status 3.
    """
