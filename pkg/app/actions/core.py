import importlib
import inspect
from typing import Any, Dict

from pydantic import BaseModel

from app.services.core import ActionTypeEnum


class ActionConfiguration(BaseModel):
    action_type: ActionTypeEnum = ActionTypeEnum.GENERIC

    class Config:
        extra = "forbid"

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "ActionConfiguration":
        return cls.parse_obj(values)


class DataActionConfiguration(ActionConfiguration):
    action_type: ActionTypeEnum = ActionTypeEnum.DATA


class TrainingActionConfiguration(ActionConfiguration):
    action_type: ActionTypeEnum = ActionTypeEnum.TRAINING


class GenericActionConfiguration(ActionConfiguration):
    pass


def discover_actions(module_name, prefix):
    action_handlers = {}

    # Import the module using importlib
    module = importlib.import_module(module_name)
    all_members = inspect.getmembers(module)

    # Iterate through the members and filter functions by prefix
    for name, func in all_members:
        if name.startswith(prefix) and inspect.isfunction(func):
            key = name[len(prefix):]  # Remove prefix
            parameter = inspect.signature(func).parameters.get("action_config")
            if parameter is not None and parameter.annotation != inspect.Parameter.empty:
                config_model = parameter.annotation
            else:
                config_model = GenericActionConfiguration
            action_handlers[key] = (func, config_model)

    return action_handlers
