"""Exception hierarchy shared by every module."""


class BundleError(Exception):
    """Base class for all library errors."""


class ParseError(BundleError):
    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)


class ArityError(BundleError):
    pass


class UnknownAgent(BundleError):
    pass


class UnknownProposition(BundleError):
    pass


class CapExceeded(BundleError):
    """A configured size cap would be exceeded; raised instead of truncating."""


class PreconditionError(BundleError):
    def __init__(self, name, detail=None):
        self.name = name
        self.detail = detail
        msg = f"precondition failed: {name}"
        if detail is not None:
            msg += f" ({detail})"
        super().__init__(msg)


class ModelFormatError(BundleError):
    pass


class GenerationError(BundleError):
    """A random generator exhausted its retry budget."""
