"""Exception hierarchy shared by every module."""


class CertError(Exception):
    """Base class for all package errors."""


class DomainError(CertError, ValueError):
    """An argument lies outside the domain of a formula or operation."""


class OutOfInjectivityError(DomainError):
    """A point is too far from the chart center for the log map."""


class GraphConstructionError(CertError, ValueError):
    """The vertex set violates a construction precondition (e.g. duplicates)."""


class DisconnectedGraphError(CertError):
    """An operation that needs a connected graph received a disconnected one."""


class DegreeError(CertError):
    """The graph has an isolated vertex where positive degrees are required."""


class PreconditionError(CertError):
    """A structural precondition (e.g. an empty grid cell) does not hold."""


class InternalConsistencyError(CertError):
    """A condition guaranteed by construction was found violated."""


class FrameError(CertError):
    """The wavelet bank leaves part of the spectrum uncovered."""


class ConfigError(CertError, ValueError):
    """Malformed scenario configuration."""

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
