"""Exception types shared across the package."""


class PairRankError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PairRankError):
    """A rating or sampler configuration violates its invariants."""


class IntegrityError(PairRankError):
    """A record references a topic (or annotator) that is not known."""


class DuplicateTopicError(PairRankError):
    """Attempt to register a topic that already exists (by slug or entity)."""


class PoolExhaustedError(PairRankError):
    """No annotatable pair is left: every pair is capped, parked or checked out."""


class IngestError(PairRankError):
    """A metadata dump could not be read or yielded zero usable records."""


class AgreementUndefinedError(PairRankError):
    """Inter-rater agreement is undefined: no unit carries two or more labels."""


class DegenerateAgreementError(PairRankError):
    """Expected disagreement is zero (every label identical), alpha undefined."""


class PreconditionError(PairRankError):
    """An operation-specific precondition was violated by the input."""


class AuthError(PairRankError):
    """The request carries no valid annotator credential."""


class CheckoutError(PairRankError):
    """A submitted pair_id is unknown, expired, or owned by someone else."""


class TransportError(PairRankError):
    """A network request failed after retries; safe to retry later."""


class ProtocolError(PairRankError):
    """The remote service answered with a payload we cannot interpret."""
