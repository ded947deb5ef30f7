"""Exception hierarchy shared by every stage of the pipeline.

All domain failures derive from :class:`SigVerifyError`; the CLI maps them to
exit code 1.
"""


class SigVerifyError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigError(SigVerifyError, ValueError):
    """A parameter is out of its admissible range."""


class ParseError(SigVerifyError, ValueError):
    """A corpus or sample file does not follow the CSV schema."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{':'.join(where)}: {message}"
        super().__init__(message)


class EmptyCorpusError(ParseError):
    """The corpus file holds a header but no samples."""


class ProtocolError(SigVerifyError):
    """A dataset cannot satisfy the requested train/test protocol."""


class ContractError(SigVerifyError, ValueError):
    """An input violates an operation's preconditions (shapes, symmetry, ...)."""


class DegenerateGraphError(SigVerifyError):
    """The affinity graph has an isolated vertex, so D is singular."""


class EmptyClusterError(SigVerifyError):
    """A reference interval was requested for a cluster with no members."""


class EnrollmentError(SigVerifyError):
    """A user model cannot be built from the supplied training samples."""


class EvaluationError(SigVerifyError):
    """The evaluation harness cannot score a split (missing model, no tests)."""


class UnknownUserError(SigVerifyError, KeyError):
    """No enrolled model exists for the claimed user."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown user"


class KnowledgebaseError(SigVerifyError):
    """Base class for knowledgebase persistence failures."""


class KnowledgebaseNotFoundError(KnowledgebaseError, FileNotFoundError):
    pass


class VersionError(KnowledgebaseError):
    pass


class CorruptModelError(KnowledgebaseError):
    """A stored model violates a UserModel invariant."""
