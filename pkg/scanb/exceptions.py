"""
All errors raised by ``scanb``.

Every error derives from :class:`ScanbError` and from the closest builtin,
so callers can catch either one:

.. code:: python

  >>> from scanb.exceptions import DimensionError, ScanbError

  >>> assert issubclass(DimensionError, ScanbError)
  >>> assert issubclass(DimensionError, ValueError)

"""


class ScanbError(Exception):
    """Base class for every error of this package."""


class DimensionError(ScanbError, ValueError):
    """Tensor extents do not agree."""


class ContractError(ScanbError, ValueError):
    """A precondition of an operation is violated."""


class NonFiniteError(ScanbError, ArithmeticError):
    """A forward operation produced ``nan`` or ``inf``."""


class OracleError(ScanbError, RuntimeError):
    """A verification oracle can not produce a trustworthy answer."""


class SpawnError(ScanbError, RuntimeError):
    """Objects can not be placed on the table without overlapping."""


class ExpertError(ScanbError, RuntimeError):
    """Scripted expert can not finish the task."""


class ConfigurationError(ScanbError, ValueError):
    """Invalid configuration value or document."""


class DatasetFormatError(ScanbError, ValueError):
    """Dataset file is truncated, malformed or has the wrong version."""


class CheckpointError(ScanbError, ValueError):
    """Checkpoint file does not match the model or the format version."""


class UnsupportedMetricError(ScanbError, TypeError):
    """Metric is not defined for the given conditioning strategy."""


class TrainingAborted(ScanbError, ArithmeticError):
    """Training produced a non-finite loss and stopped."""

    def __init__(self, message: str, last_checkpoint: object = None) -> None:
        """``last_checkpoint`` is the path of the last good checkpoint."""
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
