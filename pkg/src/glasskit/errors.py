"""Exception hierarchy shared by every glasskit subsystem.

Each error carries a stable ``code`` string so scenario scripts and CLI
output can match failures without depending on Python class names.
"""

from __future__ import annotations


class GlassError(Exception):
    """Base class for all glasskit errors."""

    code = "error"


# --- crypto -----------------------------------------------------------------

class AuthenticationFailure(GlassError):
    """Ciphertext or wrapped key failed authentication: tampered or wrong key."""

    code = "tampered-or-wrong-key"


class Base58Error(GlassError, ValueError):
    """Input is not valid base58btc text."""

    code = "base58-format"


class CanonicalizationError(GlassError, ValueError):
    """Value cannot be canonically serialized (floats, non-text keys, ...)."""

    code = "canonicalization-error"


# --- content addressing -----------------------------------------------------

class CidFormatError(GlassError, ValueError):
    """Text or bytes do not form a valid content identifier."""

    code = "cid-format"


class BlockNotFound(GlassError):
    def __init__(self, cid_text: str):
        super().__init__(f"block not found: {cid_text}")
        self.cid_text = cid_text

    code = "block-not-found"


class BlockCorrupt(GlassError):
    """Fetched bytes do not hash to the requested content id."""

    def __init__(self, cid_text: str):
        super().__init__(f"block corrupt: {cid_text}")
        self.cid_text = cid_text

    code = "block-corrupt"


# --- swarm ------------------------------------------------------------------

class SwarmRejected(GlassError):
    """Node does not hold the swarm key; no member state is visible to it."""

    code = "swarm-rejected"


class ContentUnavailable(GlassError):
    def __init__(self, cid_text: str):
        super().__init__(f"no provider for: {cid_text}")
        self.cid_text = cid_text

    code = "content-unavailable"


# --- ledger -----------------------------------------------------------------

class ConfigError(GlassError, ValueError):
    code = "config-error"


class EnrollmentError(GlassError):
    code = "enrollment-error"


class AuthError(GlassError):
    """Identity certificate or signature could not be verified."""

    code = "auth-error"


class ChaincodeError(GlassError):
    """Base for errors raised inside chaincode execution; the rejected
    invocation is still appended to the audit log."""

    code = "chaincode-error"


class AccessDenied(ChaincodeError):
    def __init__(self, org: str, resource: str):
        super().__init__(f"access denied: org={org} resource={resource}")
        self.org = org
        self.resource = resource

    code = "access-denied"


class AlreadyExists(ChaincodeError):
    code = "already-exists"


class NotFound(ChaincodeError):
    code = "not-found"


class InvalidDid(ChaincodeError):
    code = "invalid-did"


class ValidationError(ChaincodeError):
    """Schema or registry payload failed validation; ``violations`` lists
    each problem."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)

    code = "validation-error"


# --- portal -----------------------------------------------------------------

class TrustError(GlassError):
    """Issuer is absent from, or type-mismatched in, the trust policy."""

    code = "issuer-untrusted"


class HolderMismatch(GlassError):
    code = "holder-mismatch"


class UnsupportedUri(GlassError):
    code = "unsupported-uri"


# --- workspace / CLI ----------------------------------------------------------

class WorkspaceError(GlassError):
    code = "workspace-error"


class WorkspaceLocked(WorkspaceError):
    code = "workspace-locked"
