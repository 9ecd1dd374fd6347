import json
import logging
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from .core import LogLevel


logger = logging.getLogger(__name__)
# Single-line JSON activity records
activity_stream = logging.getLogger("app.activity")


class ActivityEvent(BaseModel):
    event_type: str
    action_id: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    config_data: Dict[str, Any] = Field(default_factory=dict)


class ActionStarted(ActivityEvent):
    event_type: str = "ActionStarted"


class ActionComplete(ActivityEvent):
    event_type: str = "ActionComplete"
    result: Optional[Dict[str, Any]] = None


class ActionFailed(ActivityEvent):
    event_type: str = "ActionFailed"
    error: str


class CustomActivityLog(ActivityEvent):
    event_type: str = "CustomActivityLog"
    title: str
    level: LogLevel = LogLevel.INFO
    data: Optional[Dict[str, Any]] = None


def publish_event(event: ActivityEvent) -> str:
    """Write the event as one JSON line on the activity stream and return the line."""
    record = json.dumps(event.dict(), default=str, sort_keys=True)
    level = logging.getLevelName(event.level.value) if isinstance(event, CustomActivityLog) else logging.INFO
    activity_stream.log(level, record)
    logger.debug(f"Published {event.event_type} for action '{event.action_id}'.")
    return record


def log_activity(action_id: str, title: str, level="INFO", config_data: dict = None, data: dict = None) -> str:
    """
    Record a custom activity entry for an action.
    :param action_id: id of the action being executed, e.g. "train"
    :param title: a human-readable line, e.g. "User 12 has no unwatched items"
    :param level: DEBUG, INFO, WARNING or ERROR
    :param data: any extra data to be logged as a dict
    """
    return publish_event(
        CustomActivityLog(
            action_id=action_id,
            title=title,
            level=level,
            config_data=config_data or {},
            data=data,
        )
    )


def activity_logger(on_start=True, on_completion=True, on_error=True):
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            action_id = func.__name__.replace("action_", "")
            action_config = kwargs.get("action_config")
            config_data = action_config.dict() if action_config else {}
            if on_start:
                publish_event(ActionStarted(action_id=action_id, config_data=config_data))
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                if on_error:
                    publish_event(ActionFailed(action_id=action_id, config_data=config_data, error=str(e)))
                raise e
            else:
                if on_completion:
                    publish_event(ActionComplete(action_id=action_id, config_data=config_data, result=result))
                return result
        return wrapper
    return decorator
