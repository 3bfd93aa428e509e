"""Engine exception hierarchy with stable error codes.

Every error carries a frozen ``code`` (what API clients switch on) and a
default ``http_status`` for the service layer. Codes never change once
released; add new classes instead of renaming.
"""

from __future__ import annotations


class EngineError(Exception):
    code = "ENGINE_ERROR"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# volume-io

class MalformedHeader(EngineError):
    code = "MALFORMED_HEADER"
    http_status = 400


class UnsupportedDatatype(EngineError):
    code = "UNSUPPORTED_DATATYPE"
    http_status = 400


class TruncatedData(EngineError):
    code = "TRUNCATED_DATA"
    http_status = 400


class IndexOutOfRange(EngineError):
    """Slice index outside the volume; path-level, hence 404."""

    code = "OUT_OF_BOUNDS"
    http_status = 404


class NonPositiveWindow(EngineError):
    code = "NON_POSITIVE_WINDOW"
    http_status = 400


class DimsMismatch(EngineError):
    code = "DIMS_MISMATCH"
    http_status = 400


# annotation-model

class OutOfBounds(EngineError):
    """Prompt or brush coordinates outside the slice; body-level, hence 422."""

    code = "OUT_OF_BOUNDS"
    http_status = 422


class InvalidPromptSet(EngineError):
    """Prompt set that cannot seed a mask (no positive point and no box)."""

    code = "INVALID_PROMPT_SET"
    http_status = 422


class RunSumMismatch(EngineError):
    code = "RUN_SUM_MISMATCH"
    http_status = 400


class UnknownSession(EngineError):
    code = "UNKNOWN_SESSION"
    http_status = 404


class UnknownVolume(EngineError):
    code = "UNKNOWN_VOLUME"
    http_status = 404


class NothingToUndo(EngineError):
    code = "NOTHING_TO_UNDO"
    http_status = 409


class NothingToRedo(EngineError):
    code = "NOTHING_TO_REDO"
    http_status = 409


# predictor

class UnknownPredictor(EngineError):
    code = "UNKNOWN_PREDICTOR"
    http_status = 404


class DuplicatePredictorId(EngineError):
    """Registry rejects a second registration for an id; logged, first wins."""

    code = "DUPLICATE_PREDICTOR_ID"
    http_status = 409


class UnsupportedPrompt(EngineError):
    code = "UNSUPPORTED_PROMPT"
    http_status = 400


class BridgeUnavailable(EngineError):
    code = "BRIDGE_UNAVAILABLE"
    http_status = 503


class ProtocolError(EngineError):
    code = "PROTOCOL_ERROR"
    http_status = 502


class ComputeFailed(EngineError):
    code = "COMPUTE_FAILED"
    http_status = 502


class CacheIOError(EngineError):
    code = "CACHE_IO_ERROR"
    http_status = 500


class SequenceUnsupported(EngineError):
    code = "SEQUENCE_UNSUPPORTED"
    http_status = 400


class NoPromptedSlices(EngineError):
    code = "NO_PROMPTED_SLICES"
    http_status = 409


class SequenceBusy(EngineError):
    """A second run was requested on a handle that is still streaming."""

    code = "SEQUENCE_BUSY"
    http_status = 409


class StaleEmbedding(EngineError):
    """Bridge no longer knows a cached embedding id; caller may re-encode."""

    code = "STALE_EMBEDDING"
    http_status = 502


# native-predictor

class NoPositiveSeeds(EngineError):
    code = "NO_POSITIVE_SEEDS"
    http_status = 422


# orchestrator

class NoConditionalSlices(EngineError):
    code = "NO_CONDITIONAL_SLICES"
    http_status = 409


class FromSliceNotConditional(EngineError):
    code = "FROM_SLICE_NOT_CONDITIONAL"
    http_status = 409


class SessionBusy(EngineError):
    code = "SESSION_BUSY"
    http_status = 409


class UnknownJob(EngineError):
    code = "UNKNOWN_JOB"
    http_status = 404


# service

class UploadTooLarge(EngineError):
    code = "UPLOAD_TOO_LARGE"
    http_status = 413
