class EMVJError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(EMVJError, ValueError):
    pass


class TrainingDivergedError(EMVJError, RuntimeError):
    pass


class DataError(EMVJError, ValueError):
    pass


class ConfigError(EMVJError, ValueError):
    pass
