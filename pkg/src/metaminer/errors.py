"""Exception hierarchy shared across the toolkit."""


class MetaminerError(Exception):
    """Base class for all toolkit errors."""


class DataError(MetaminerError):
    """Raised for malformed or unusable input data (CLI exit status 2)."""


class LogParseError(DataError):
    def __init__(self, message, line=None, column=None, trace_index=None, row=None):
        self.line = line
        self.column = column
        self.trace_index = trace_index
        self.row = row
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if trace_index is not None:
            where.append(f"trace {trace_index}")
        if row is not None:
            where.append(f"row {row}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class EmptyLogError(DataError):
    pass


class NetError(MetaminerError):
    """Structural problems with a Petri net or process tree."""


class TransitionNotEnabled(NetError):
    pass


class DegenerateNetError(NetError):
    pass


class ConfigError(MetaminerError):
    pass


class ModelMismatchError(DataError):
    """Feature dimension or manifest fingerprint does not match a trained model."""


class MetricError(MetaminerError):
    def __init__(self, metric, cause):
        self.metric = metric
        self.cause = cause
        super().__init__(f"{metric}: {cause}")


class EmptyDatabaseError(DataError):
    pass
