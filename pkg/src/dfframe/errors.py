"""Exception types shared across the package."""


class DFFrameError(Exception):
    """Base class for all package errors."""


class ShapeError(DFFrameError, ValueError):
    pass


class ParameterError(DFFrameError, ValueError):
    pass


class StateError(DFFrameError, RuntimeError):
    pass


class StructureError(DFFrameError, ValueError):
    pass


class DataError(DFFrameError, ValueError):
    pass


class InputError(DFFrameError, ValueError):
    pass


class CoverageError(DFFrameError, ValueError):
    pass


class PairingError(DFFrameError, ValueError):
    pass


class DivergenceError(DFFrameError, ArithmeticError):
    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"loss diverged (NaN) at epoch {epoch}")


class PretrainError(DFFrameError, RuntimeError):
    pass


class ConfigError(DFFrameError, ValueError):
    pass


class StageError(DFFrameError, RuntimeError):
    pass
