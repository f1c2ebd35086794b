"""Exception hierarchy.

Everything raised deliberately by the package derives from AspectEvalError.
Provider failures derive from ProviderError so the CLI can map them to their
own exit code.
"""


class AspectEvalError(Exception):
    pass


class EmptyPhraseError(AspectEvalError, ValueError):
    pass


class InvalidThetaError(AspectEvalError, ValueError):
    pass


class DimensionMismatchError(AspectEvalError, ValueError):
    pass


class ZeroVectorError(AspectEvalError, ValueError):
    pass


class NonFiniteCostError(AspectEvalError, ValueError):
    pass


class MatchIndexError(AspectEvalError, IndexError):
    """A MatchSet refers to indices outside the phrase lists it was given."""


class UnknownDocIdError(AspectEvalError, KeyError):
    pass


class LengthMismatchError(AspectEvalError, ValueError):
    pass


class EmptyInputError(AspectEvalError, ValueError):
    pass


class ParseError(AspectEvalError, ValueError):
    def __init__(self, message, *, path=None, locus=None):
        self.path = path
        self.locus = locus
        where = ""
        if path is not None:
            where = f"{path}"
            if locus is not None:
                where += f":{locus}"
            where += ": "
        super().__init__(where + message)


class DuplicateDocIdError(AspectEvalError, ValueError):
    pass


class ConflictingDuplicateAspectError(AspectEvalError, ValueError):
    pass


class RaggedRatingsError(AspectEvalError, ValueError):
    pass


class ProviderError(AspectEvalError):
    pass


class MissingEmbeddingError(ProviderError, KeyError):
    pass


class ProviderUnreachableError(ProviderError):
    pass


class ProviderDimensionChangedError(ProviderError):
    pass


class DegenerateAgreementWarning(UserWarning):
    """Expected agreement is 1, so kappa is undefined and reported as 1."""
