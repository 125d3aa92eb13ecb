"""Exception types shared across the package.

The CLI maps these onto process exit codes, so code deeper in the stack
should raise the most specific type that applies rather than bare
ValueError / RuntimeError.
"""


class PromoplanError(Exception):
    """Base class for all package errors."""


class ConfigError(PromoplanError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(PromoplanError):
    """Malformed input data or artifacts (CLI exit code 3)."""


class RefusalError(PromoplanError):
    """A size or safety bound was exceeded and the operation declined
    to run rather than produce garbage or hang (CLI exit code 4)."""


class DimensionMismatchError(DataError):
    """A weight matrix or feature vector has the wrong shape.

    Carries the name of the offending layer so the message is actionable.
    """

    def __init__(self, layer: str, expected, got):
        self.layer = layer
        self.expected = expected
        self.got = got
        super().__init__(f"layer {layer!r}: expected shape {expected}, got {got}")


class NonFiniteError(DataError):
    """A NaN or infinity appeared where only finite values are legal."""

    def __init__(self, where: str):
        self.where = where
        super().__init__(f"non-finite value in {where}")
