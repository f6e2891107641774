"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A caller passed a value outside an operation's precondition."""


class GenerationFailed(RuntimeError):
    """Instance generation exhausted its rejection budget."""


class InstanceParseError(ValueError):
    """An instance file is malformed or violates the model assumptions."""


class ConfigError(ValueError):
    """A run configuration is invalid. The message names the offending field."""
