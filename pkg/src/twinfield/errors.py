"""Exception hierarchy shared by all twinfield modules."""


class TwinFieldError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TwinFieldError, ValueError):
    """An argument lies outside its allowed numeric domain."""


# fock
class InvalidCutoff(DomainError):
    pass


class TailMassExceeded(TwinFieldError):
    """Truncating to the requested cutoff would discard too much probability."""


class EmptySubspace(DomainError):
    pass


class IndexBeyondCutoff(DomainError):
    pass


class WeightOutOfRange(DomainError):
    pass


# protocol
class ConfigError(DomainError):
    pass


class RoundIdMismatch(TwinFieldError):
    pass


# attack
class BothPortsNonVacuum(TwinFieldError):
    """Both beam-splitter outputs carry light, impossible with matched phases."""


class WrongStage(TwinFieldError):
    pass


class AnnounceBeforeStep4(WrongStage):
    """Eve tried to announce before her filtering finished."""


class DisclosureMismatch(TwinFieldError):
    pass


# analysis
class InconsistentBundle(TwinFieldError):
    pass


class NoSiftedBits(TwinFieldError):
    pass


class EmptyHistogram(TwinFieldError):
    pass


class NoAcceptedRounds(TwinFieldError):
    pass
