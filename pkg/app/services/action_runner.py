import logging
from typing import Any, Dict, Optional

import pydantic
from pydantic import BaseModel

from app.actions import action_handlers
from app.actions.configurations import resolve_values
from .activity_logger import ActionFailed, publish_event
from .core import ExitCode
from .errors import ConfigurationNotFound, ConfigurationValidationError, OutputDirectoryLocked
from .utils import one_line


logger = logging.getLogger(__name__)


class ActionResult(BaseModel):
    action_id: str
    exit_code: ExitCode = ExitCode.OK
    message: str = ""
    result: Optional[Dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        return self.exit_code == ExitCode.OK


def _format_validation_error(error: pydantic.ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in e['loc'])}: {e['msg']}" for e in error.errors()
    )


def execute_action(action_id: str, flags: Optional[Dict[str, Any]] = None, config_path=None) -> ActionResult:
    """
    Interface for executing actions.
    :param action_id: "prepare", "train", "evaluate", "ablate", "sweep", "synth" or "bench"
    :param flags: option values given on the command line; None values are ignored
    :param config_path: optional 'DKSE-CONFIG v1' file
    :return: an ActionResult; failures carry a nonzero exit code and a one-line diagnostic
    """
    logger.info(f"Executing action '{action_id}'...")
    try:
        handler, config_model = action_handlers[action_id]
    except KeyError:
        message = f"Action '{action_id}' is not supported, expected one of {sorted(action_handlers)}"
        logger.error(message)
        publish_event(ActionFailed(action_id=action_id, error=message))
        return ActionResult(action_id=action_id, exit_code=ExitCode.UNKNOWN_ACTION, message=message)

    config_data = {}
    try:  # Parse and validate the configuration
        config_data = resolve_values(flags, config_path)
        parsed_config = config_model.from_flat(config_data)
    except pydantic.ValidationError as e:
        message = f"Invalid configuration for action '{action_id}': {_format_validation_error(e)}"
        logger.error(message)
        publish_event(ActionFailed(action_id=action_id, config_data=config_data, error=message))
        return ActionResult(action_id=action_id, exit_code=ExitCode.INVALID_CONFIGURATION, message=message)
    except (ConfigurationNotFound, ConfigurationValidationError) as e:
        message = f"Invalid configuration for action '{action_id}': {one_line(e)}"
        logger.error(message)
        publish_event(ActionFailed(action_id=action_id, config_data=config_data, error=message))
        return ActionResult(action_id=action_id, exit_code=ExitCode.INVALID_CONFIGURATION, message=message)

    try:  # Execute the action
        result = handler(action_config=parsed_config)
    except OutputDirectoryLocked as e:
        message = one_line(e)
        logger.error(message)
        return ActionResult(action_id=action_id, exit_code=ExitCode.OUTPUT_LOCKED, message=message)
    except Exception as e:
        message = f"Action '{action_id}' failed: {type(e).__name__}: {one_line(e)}"
        logger.exception(message)
        return ActionResult(action_id=action_id, exit_code=ExitCode.FAILURE, message=message)
    return ActionResult(action_id=action_id, message=f"Action '{action_id}' complete.", result=result)
