from .core import ActionConfiguration, DataActionConfiguration, TrainingActionConfiguration, discover_actions


HANDLERS_MODULE = "app.actions.handlers"
HANDLER_PREFIX = "action_"


def setup_action_handlers():
    """Command name -> (handler, configuration model), one per ``action_*`` function."""
    return discover_actions(module_name=HANDLERS_MODULE, prefix=HANDLER_PREFIX)


action_handlers = setup_action_handlers()
