class CalculusException(Exception):
    """
    Base for every failure the calculus reports to its caller.

    The CLI catches this type, logs the message and maps the concrete class
    to an exit code through `exit_code`. Library callers can catch the
    subclasses they care about.

    Only the first argument to the constructor is used in the error message. If no
    message is provided, a default one naming the error class is used. But ideally,
    a message should be provided.
    """

    exit_code = 2

    def __init__(self, *args):
        if len(args) == 0:
            args = (f"{type(self).__name__} with no message provided",)
        super().__init__(args[0])


class InputError(CalculusException):
    """Bad user input: files, formulas, flags or preconditions."""


class FormulaSyntaxError(InputError):
    def __init__(self, message: str, position: int = 0, expected: str = ""):
        self.position = position
        self.expected = expected
        super().__init__(f"syntax error at position {position}: {message}")


class UnknownVariable(InputError):
    pass


class MalformedAtom(InputError):
    pass


class SchemaError(InputError):
    pass


class DomainError(InputError):
    pass


class SelfReference(InputError):
    pass


class UnknownContext(InputError):
    pass


class SignatureMismatch(InputError):
    pass


class SignatureTooLarge(InputError):
    pass


class PreconditionViolation(InputError):
    pass


class NotUnique(InputError):
    """The model has no unique solution for some intervention and context."""


class ExtensionLimitExceeded(InputError):
    """Raised instead of silently truncating an extension enumeration."""


class InconsistentTheory(CalculusException):
    exit_code = 1


class InvalidExtension(CalculusException):
    """An assignment that should be an extension breaks one of its conditions."""


class WitnessError(CalculusException):
    """No fragment model could be found for a negative literal."""
