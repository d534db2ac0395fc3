"""Exception types shared across the library.

Every failure mode that callers are expected to handle has a dedicated
class here so tests and the CLI can map them to behavior (exit codes,
HTTP statuses) without string matching.
"""


class MmkitError(Exception):
    """Base class for all library errors."""


# --- registry ---------------------------------------------------------------

class InvalidNamespaceError(MmkitError):
    def __init__(self, namespace):
        self.namespace = namespace
        super().__init__(f"unknown registry namespace: {namespace!r}")


class DuplicateNameError(MmkitError):
    def __init__(self, namespace, name):
        self.namespace = namespace
        self.name = name
        super().__init__(f"{name!r} is already registered in namespace {namespace!r}")


class NotFoundError(MmkitError):
    """Lookup failure; carries up to 3 close registered names as suggestions."""

    def __init__(self, namespace, name, suggestions=()):
        self.namespace = namespace
        self.name = name
        self.suggestions = list(suggestions)
        msg = f"{name!r} is not registered in namespace {namespace!r}"
        if self.suggestions:
            msg += f" (did you mean: {', '.join(self.suggestions)}?)"
        super().__init__(msg)


class KeyMissingError(MmkitError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no registered value for key {key!r}")


# --- config -----------------------------------------------------------------

class ConfigParseError(MmkitError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}" if line else f"{path}: {message}")


class TypeConflictError(MmkitError):
    def __init__(self, path, base_kind, override_kind):
        self.path = path
        super().__init__(
            f"cannot merge {override_kind} into {base_kind} at {path!r}"
        )


class MalformedOptionError(MmkitError):
    def __init__(self, option):
        self.option = option
        super().__init__(f"override option must look like 'dotted.path=value', got {option!r}")


class ValidationError(MmkitError):
    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("invalid run config:\n" + "\n".join(f"  - {m}" for m in self.messages))


# --- processors -------------------------------------------------------------

class BadChannelCountError(MmkitError):
    def __init__(self, got):
        self.got = got
        super().__init__(f"expected a 3-channel image, got {got} channel(s)")


# --- data -------------------------------------------------------------------

class ChecksumMismatchError(MmkitError):
    def __init__(self, split, expected, actual):
        self.split = split
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"checksum mismatch for split {split!r}: expected {expected}, got {actual}"
        )


class FetchFailedError(MmkitError):
    def __init__(self, url, cause):
        self.url = url
        self.cause = cause
        super().__init__(f"failed to fetch {url}: {cause}")


class AnnotationParseError(MmkitError):
    def __init__(self, index, message):
        self.index = index
        super().__init__(f"bad annotation record at line {index}: {message}")


# --- models -----------------------------------------------------------------

class WeightShapeMismatchError(MmkitError):
    def __init__(self, parameter, expected, got):
        self.parameter = parameter
        super().__init__(
            f"checkpoint tensor shape mismatch for {parameter!r}: "
            f"expected {tuple(expected)}, got {tuple(got)}"
        )


class IncompatibleArchError(MmkitError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"checkpoint was saved for arch {got!r}, expected {expected!r}")


class CorruptCheckpointError(MmkitError):
    pass


class DegenerateBatchError(MmkitError):
    def __init__(self, n):
        super().__init__(f"batch of {n} pair(s) is too small; need at least 2")


class EmptyCaptionError(MmkitError):
    pass


class EmptyAnswerListError(MmkitError):
    pass


class MissingModalityError(MmkitError):
    def __init__(self, mode, field):
        self.mode = mode
        self.field = field
        super().__init__(f"mode {mode!r} requires sample field {field!r}")


class UnsupportedModeError(MmkitError):
    def __init__(self, arch, mode):
        super().__init__(f"model {arch!r} does not support feature mode {mode!r}")


# --- tasks ------------------------------------------------------------------

class ShapeError(MmkitError):
    pass


class EmptyGroundTruthError(MmkitError):
    def __init__(self, query):
        self.query = query
        super().__init__(f"query {query} has no ground-truth gallery items")


class EmptyLabelsError(MmkitError):
    pass


class DuplicateLabelsError(MmkitError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"duplicate label after text processing: {label!r}")


class BadKError(MmkitError):
    def __init__(self, k, n):
        super().__init__(f"k must satisfy 1 <= k <= {n}, got {k}")


# --- optim ------------------------------------------------------------------

class StepOutOfRangeError(MmkitError):
    def __init__(self, step, total):
        super().__init__(f"step {step} outside [0, {total}]")


class BadHyperparameterError(MmkitError):
    pass


# --- runners ----------------------------------------------------------------

class NonFiniteLossError(MmkitError):
    def __init__(self, step, value):
        self.step = step
        super().__init__(f"non-finite training loss ({value}) at step {step}")
