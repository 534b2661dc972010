"""Exception types raised across the package.

Every error is a subclass of EmofeatsError so callers can catch the whole
family; names follow the operation contracts they guard.
"""


class EmofeatsError(Exception):
    """Base class for all package errors."""


# audio
class MissingFile(EmofeatsError):
    pass


class UnsupportedEncoding(EmofeatsError):
    pass


class EmptyAudio(EmofeatsError):
    pass


class SampleRateMismatch(EmofeatsError):
    def __init__(self, actual_hz: int, expected_hz: int):
        super().__init__(f"sample rate {actual_hz} Hz, expected {expected_hz} Hz")
        self.actual_hz = actual_hz
        self.expected_hz = expected_hz


# mfcc
class DegenerateFilter(EmofeatsError):
    pass


class AudioTooShort(EmofeatsError):
    pass


# network
class ShapeMismatch(EmofeatsError):
    pass


class ConfigWeightMismatch(EmofeatsError):
    pass


class NonFiniteActivation(EmofeatsError):
    pass


# weight files
class IoFailure(EmofeatsError):
    pass


class BadMagic(EmofeatsError):
    pass


class VersionUnsupported(EmofeatsError):
    pass


class ChecksumMismatch(EmofeatsError):
    pass


class TruncatedFile(EmofeatsError):
    pass


# features
class EmptyTensor(EmofeatsError):
    pass


class KOutOfRange(EmofeatsError):
    pass


# statistics
class ZeroVariance(EmofeatsError):
    pass


class LengthMismatch(EmofeatsError):
    pass


class TooFewUtterances(EmofeatsError):
    pass


# selection / regression
class TooFewSamples(EmofeatsError):
    pass


class KTooLarge(EmofeatsError):
    pass


class NumericalFailure(EmofeatsError):
    pass


class DimensionMismatch(EmofeatsError):
    pass


# evaluation
class ParseError(EmofeatsError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class RangeViolation(EmofeatsError):
    pass


class DuplicateId(EmofeatsError):
    pass


class ConsistencyDataMissing(EmofeatsError):
    pass


class TooFewSpeakers(EmofeatsError):
    pass


class FoldFailure(EmofeatsError):
    def __init__(self, speaker_id: str, cause: Exception):
        super().__init__(f"fold for speaker {speaker_id!r} failed: {cause}")
        self.speaker_id = speaker_id
        self.cause = cause


class FoldStructureMismatch(EmofeatsError):
    pass
