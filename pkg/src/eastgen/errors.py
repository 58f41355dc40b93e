"""Exception hierarchy shared across the package."""


class EastgenError(Exception):
    """Base class for all errors raised by this package."""


class CorpusParseError(EastgenError):
    """A corpus file could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CorpusValidationError(EastgenError):
    """A parsed sentence violates the IOB tagging invariants."""

    def __init__(self, message: str, sentence: int, position: int):
        super().__init__(f"sentence {sentence}, token {position}: {message}")
        self.sentence = sentence
        self.position = position


class EmptyDatasetError(EastgenError):
    pass


class EmbeddingFormatError(EastgenError):
    """A malformed embedding file row; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OutOfVocabularyError(EastgenError):
    """Raised when a neighbor query token has no embedding vector."""

    def __init__(self, token: str):
        super().__init__(f"token not in vocabulary: {token!r}")
        self.token = token


class TreeSchemaError(EastgenError):
    """A tree document violates the serialization schema; carries the node path."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class TreeValidationError(EastgenError):
    """A structurally well-formed tree breaks one or more model invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class LanguageSizeExceeded(EastgenError):
    """Language enumeration aborted; carries the count reached before abort."""

    def __init__(self, limit: int, partial_count: int):
        super().__init__(
            f"enumerated language exceeds limit {limit} (reached {partial_count})"
        )
        self.limit = limit
        self.partial_count = partial_count


class MissingLexiconError(EastgenError):
    """A tree references a slot for which the lexicon has no surface forms."""

    def __init__(self, slot: str):
        super().__init__(f"no lexicon entries for slot {slot!r}")
        self.slot = slot
