import dataclasses
from typing import Dict

import yaml

from lureid.utils.exceptions import ConfigurationError


class ConfigMixin:
    """dict and YAML conversion for configuration dataclasses."""

    def as_dict(self) -> Dict:
        """Returns the configuration as a plain dict."""
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Dict):
        """Builds the configuration from a dict, rejecting unknown keys."""
        if not isinstance(d, dict):
            raise ConfigurationError(f"{cls.__name__} expects a mapping, got {type(d).__name__}")
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
        return cls(**d)

    def save_yml(self, file) -> None:
        """Writes the configuration to a yml file (path or open file)."""
        if isinstance(file, str) or hasattr(file, "__fspath__"):
            with open(file, "w") as f:
                yaml.safe_dump(self.as_dict(), f, sort_keys=False)
        else:
            yaml.safe_dump(self.as_dict(), file, sort_keys=False)

    @classmethod
    def from_yml(cls, file):
        """Reads a configuration written by save_yml. An empty file gives the defaults."""
        if isinstance(file, str) or hasattr(file, "__fspath__"):
            with open(file) as f:
                d = yaml.safe_load(f)
        else:
            d = yaml.safe_load(file)
        return cls.from_dict(d or {})
