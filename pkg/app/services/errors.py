

class ConfigurationNotFound(Exception):
    pass


class ConfigurationValidationError(Exception):
    pass


class GraphConstructionError(ValueError):
    pass


class NodeOutOfRange(IndexError):
    pass


class MalformedInputError(ValueError):

    def __init__(self, path, line_number, reason):
        self.path = str(path)
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{self.path}:{line_number}: {reason}")


class InsufficientDataError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


class NonFiniteValueError(ArithmeticError):
    pass


class CheckpointFormatError(ValueError):
    pass


class CheckpointMismatchError(ValueError):
    pass


class OutputDirectoryLocked(RuntimeError):
    pass
