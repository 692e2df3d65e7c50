"""Error families, one exit code per family at the CLI boundary."""


class ConfigError(Exception):
    """Bad configuration: unknown key, invalid value, missing path."""

    exit_code = 2


class DataError(Exception):
    """Dataset problems: missing class folders, undecodable files."""

    exit_code = 3


class NumericError(Exception):
    """Non-finite loss or gradient during training."""

    exit_code = 4


class CheckpointError(Exception):
    """Malformed or incompatible checkpoint file."""

    exit_code = 3


class BadMagicError(CheckpointError):
    pass


class VersionError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


class DigestMismatchError(CheckpointError):
    pass
