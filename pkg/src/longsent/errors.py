"""Exception types shared across the pipeline."""


class DataError(Exception):
    """Fatal problem with input data or configuration.

    Raised for unreadable/corrupt files, out-of-range values, and
    datasets that cannot be processed (e.g. a single-class training
    split). The CLI maps this to exit code 2.
    """


class ModelFormatError(DataError):
    """A serialized model file is truncated, inconsistent, or from an
    unsupported format version."""
