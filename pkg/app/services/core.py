from enum import Enum, IntEnum


class ActionTypeEnum(str, Enum):
    DATA = "data"
    TRAINING = "training"
    EXPERIMENT = "experiment"
    GENERIC = "generic"


class ExitCode(IntEnum):
    OK = 0
    FAILURE = 1
    INVALID_CONFIGURATION = 2
    UNKNOWN_ACTION = 3
    OUTPUT_LOCKED = 4


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
