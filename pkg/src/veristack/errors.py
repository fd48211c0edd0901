"""Exception types shared across the pipeline."""


class VeristackError(Exception):
    """Base class for all pipeline errors."""


class LabelInvalid(VeristackError):
    """Raw string does not map onto one of the four verdict labels."""


class ConfigInvalid(VeristackError):
    """A config field violates its invariant; message names the field."""


class UrlInvalid(VeristackError):
    """URL could not be parsed into a scheme and host."""


class ExtractEmpty(VeristackError):
    """No substantive text remained after boilerplate removal."""


class FetchFailed(VeristackError):
    """A single URL fetch failed (timeout, HTTP error, blocked)."""


class StatsEmptyInput(VeristackError):
    """Stats requested over an empty list of stores."""


class DimensionMismatch(VeristackError):
    """Query vector dimension differs from the index dimension."""


class ChunkNotInDocument(VeristackError):
    """Chunk to augment is not part of the supplied document chunk list."""


class BackendError(VeristackError):
    """Base class for model-backend failures."""


class BackendUnavailable(BackendError):
    """Backend unreachable or persistently failing after the retry budget."""


class BackendMalformed(BackendError):
    """Backend response violates the wire schema."""


class MissingEvidenceSet(VeristackError):
    """Prompt construction requires an evidence set that was not supplied."""


class ParseFailure(VeristackError):
    """No valid JSON object of the expected shape could be recovered."""


class QaGenerationFailed(VeristackError):
    """QA generation exhausted its retry budget at some iteration."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"QA generation failed at iteration {iteration}")


class VerdictFailed(VeristackError):
    """Verdict prediction exhausted its retry budget."""


class SelectedNotInSet(VeristackError):
    """Verdict selected a question that matches no generated QA pair."""


class EmptyInstances(VeristackError):
    """Conditional accuracy requested over zero instances."""


class MissingGold(VeristackError):
    """A predicted claim id has no gold record."""


class StageError(VeristackError):
    """Pipeline stage failure; carries the stage name for error reports."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
