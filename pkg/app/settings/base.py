import logging.config
import sys
from environs import Env

env = Env()
env.read_env()

LOGGING_LEVEL = env.str("LOGGING_LEVEL", "INFO")

DEFAULT_LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(message)s",
        },
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": LOGGING_LEVEL,
            "class": "logging.StreamHandler",
            "formatter": "verbose",
            "stream": sys.stdout
        },
        # Epoch lines and activity records are already structured
        "records": {
            "level": LOGGING_LEVEL,
            "class": "logging.StreamHandler",
            "formatter": "plain",
            "stream": sys.stdout
        },
    },
    "loggers": {
        "": {
            "handlers": ["console"],
            "level": LOGGING_LEVEL,
        },
        "app.train.epochs": {
            "handlers": ["records"],
            "level": LOGGING_LEVEL,
            "propagate": False,
        },
        "app.activity": {
            "handlers": ["records"],
            "level": LOGGING_LEVEL,
            "propagate": False,
        },
    },
}
logging.config.dictConfig(DEFAULT_LOGGING)

# Where commands write their artifacts when --out is not given
DKSE_OUTPUT_DIR = env.str("DKSE_OUTPUT_DIR", "runs")
DKSE_DEFAULT_SEED = env.int("DKSE_DEFAULT_SEED", 2023)
DKSE_LOCK_FILENAME = env.str("DKSE_LOCK_FILENAME", ".dkse.lock")
DKSE_K_GRID = [int(k) for k in env.list("DKSE_K_GRID", ["1", "2", "5", "10", "20", "50", "100"])]
DKSE_EVAL_BATCH_SIZE = env.int("DKSE_EVAL_BATCH_SIZE", 4096)
# Sweep cells sampling more routes per root than this are skipped
DKSE_SWEEP_MAX_ROUTES = env.int("DKSE_SWEEP_MAX_ROUTES", 4096)
