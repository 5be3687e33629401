# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt


class SspError(Exception):
    """Base class for every failure raised by the supervisor toolkit"""


class StructuralError(SspError):
    pass


class FiringError(SspError):
    def __init__(self, transition, deficient, index=None):
        self.transition = transition
        self.deficient = dict(deficient)
        self.index = index
        missing = ", ".join(f"{p} (needs {need}, has {have})" for p, (need, have) in self.deficient.items())
        step = f"Step {index} ({transition})" if index is not None else f"Transition {transition}"
        super().__init__(f"{step} is not enabled: {missing}")


class SequenceError(FiringError):
    def __init__(self, index, transition, deficient):
        super().__init__(transition, deficient, index)


class TruncatedGraphError(SspError):
    pass


class ParseError(SspError):
    def __init__(self, message, line=0, column=0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}" if line else message)


class SemiflowCapError(SspError):
    def __init__(self, message, partial_rows=0):
        self.partial_rows = partial_rows
        super().__init__(message)


class NotSspError(SspError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class EnforcementError(SspError):
    pass


class NotOrdinaryError(SspError):
    pass


class SiphonCapError(SspError):
    pass


class MonitorError(SspError):
    pass


class HypothesisError(SspError):
    pass


class PolicyError(SspError):
    pass


class UsageError(SspError):
    pass
