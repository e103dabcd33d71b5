"""Exception hierarchy shared by all cwbind modules."""


class CwbindError(Exception):
    """Base class for all errors raised by this package."""


class CryptoError(CwbindError):
    """A cryptographic check failed: bad signature, authentication tag
    mismatch, or decryption under a wrong key."""


class ProtocolError(CwbindError):
    """A protocol-level check failed and the run was aborted. State of the
    aborting party is left unchanged."""


class WireError(CwbindError):
    """Malformed wire bytes. The message names the byte offset at which
    decoding failed whenever one is known."""
