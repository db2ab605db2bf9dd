from pydantic import BaseModel, ConfigDict, ValidationError

from thermal_gesture.services.errors import ConfigError


class RunConfig(BaseModel):
    """Base for run-time configuration objects

    Validation failures surface as ConfigError so callers only handle the
    service error hierarchy.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            raise ConfigError(f"Invalid {type(self).__name__}: {e}") from e
