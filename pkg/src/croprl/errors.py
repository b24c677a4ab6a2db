"""Exception taxonomy shared across the framework."""


class ConfigurationError(ValueError):
    """Invalid shapes, sizes, or settings (caught at construction time)."""


class ContractViolation(ValueError):
    """A documented precondition was broken by the caller."""


class NumericalError(RuntimeError):
    """NaN/Inf appeared where finite values are required; update aborted."""


class ProtocolError(RuntimeError):
    """Malformed traffic on the environment wire protocol."""


class SchemaError(ProtocolError):
    """Well-formed message with out-of-contract content (e.g. wrong vector length)."""


class HandshakeError(ProtocolError):
    """Version negotiation with the peer failed."""


class SessionError(RuntimeError):
    """The remote environment session died, timed out, or replied with an error."""
