"""Exception types shared across the package."""


class FairCreditError(Exception):
    """Base class for all package errors."""


class SchemaError(FairCreditError):
    """Dataset schema is malformed or does not match the file."""


class DataError(FairCreditError):
    """A data value violates the schema (e.g. unmapped outcome label)."""


class DegenerateGroupError(FairCreditError):
    """A sensitive attribute ended up single-valued."""


class DegenerateSplitError(FairCreditError):
    """A train/test split emptied one side or one protected group."""


class TrainingError(FairCreditError):
    """Baseline training diverged (non-finite loss)."""
