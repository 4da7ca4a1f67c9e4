"""Exception hierarchy shared across vizbench."""

from __future__ import annotations


class VizbenchError(Exception):
    """Base class for all vizbench errors."""


class SchemaError(VizbenchError, ValueError):
    """Invalid column, binning, aggregate, filter or graph definition."""


class UnknownCategoryError(SchemaError):
    """A nominal value that the column schema does not know.

    Usually means the dataset and the workflow were built from different
    schemas.
    """

    def __init__(self, column: str, value: object):
        super().__init__(f"Unknown category {value!r} for column '{column}'")
        self.column = column
        self.value = value


class CholeskyError(VizbenchError):
    """Matrix could not be factorized, even after maximum jitter."""

    def __init__(self, minor: int, jitter: float | None = None):
        msg = f"{minor}-th leading minor is not positive definite"
        if jitter is not None:
            msg += f" (after jitter {jitter:.3g})"
        super().__init__(msg)
        self.minor = minor
        self.jitter = jitter


class GenerationError(VizbenchError, ValueError):
    """Workload generation config that cannot be satisfied."""


class QueryTimeoutError(VizbenchError):
    """A blocking engine ran past the query deadline."""

    def __init__(self, viz_name: str, time_requirement: float | None = None):
        msg = f"Query for '{viz_name}' exceeded its deadline"
        if time_requirement is not None:
            msg += f" (TR={time_requirement:g}s)"
        super().__init__(msg)
        self.viz_name = viz_name
        self.time_requirement = time_requirement


class AdapterError(VizbenchError):
    """Engine error for a single query; recorded, never fatal."""


class AdapterProtocolError(AdapterError):
    """Malformed message from an external adapter process."""


class AdapterFailure(VizbenchError):
    """The adapter can no longer serve queries."""


class WorkflowAbortedError(VizbenchError):
    """Workflow stopped by an adapter failure; keeps what was recorded."""

    def __init__(self, workflow: str, cause: BaseException, records: list):
        super().__init__(f"Workflow '{workflow}' aborted: {cause}")
        self.workflow = workflow
        self.cause = cause
        self.records = records
