"""Exception hierarchy shared across the package.

CLI exit codes map onto these: usage errors exit 1, DataError and its
subclasses exit 2, SetupViolation exits 3.
"""


class XlcatError(Exception):
    pass


class DataError(XlcatError):
    """Malformed or inconsistent input data (corpus, hierarchy, datasets)."""


class SetupViolation(XlcatError):
    """Experiment configuration breaks the constraints of its declared setup."""
