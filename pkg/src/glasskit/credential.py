"""Verifiable credentials and presentations.

A credential is an issuer-signed set of claims about a subject,
constrained by a registered schema; a presentation is a holder-signed
wrapper binding one or more credentials to a verifier's challenge. Both
carry detached Ed25519 signatures over their canonical JSON form minus
the proof member, so any single-bit change outside the proof flips
verification to false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Protocol

# canonical_parse is re-exported: credential files and the ledger share
# one canonical encoding
from .canonical import canonical_parse, canonical_serialize  # noqa: F401
from .chaincode import CredentialSchema
from .crypto import SigningKeypair, base58_decode, base58_encode, sha256, sign, verify
from .errors import HolderMismatch, ValidationError

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


class RegistryView(Protocol):
    """What verification needs from the trust registry."""

    def resolve_did(self, did: str) -> dict | None: ...

    def is_trusted_issuer(self, did: str, credential_type: str) -> bool: ...

    def get_schema(self, schema_id: str) -> CredentialSchema | None: ...


# --- schema validation ---------------------------------------------------------

def _kind_ok(value, kind: str) -> bool:
    if kind == "text":
        return isinstance(value, str)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "date":
        return isinstance(value, str) and bool(_DATE_RE.match(value))
    return False


def validate_schema(claims: dict, schema: CredentialSchema) -> list[str]:
    """Check claims against a schema; returns violations, empty when ok.

    Required attributes must be present with the right kind; anything
    beyond required and optional is rejected.
    """
    violations: list[str] = []
    allowed = {name: kind for name, kind in schema.required}
    allowed.update({name: kind for name, kind in schema.optional})
    for name, _ in schema.required:
        if name not in claims:
            violations.append(f"missing required attribute: {name}")
    for name, value in sorted(claims.items()):
        kind = allowed.get(name)
        if kind is None:
            violations.append(f"unknown attribute: {name}")
        elif not _kind_ok(value, kind):
            violations.append(f"attribute {name}: expected {kind}")
    return violations


# --- credentials ----------------------------------------------------------------

@dataclass(frozen=True)
class VerifiableCredential:
    credential_id: str
    schema_id: str
    credential_type: str
    issuer: str
    subject: str
    claims: dict
    issued_at: int
    signature: bytes
    verification_did: str

    def body_dict(self) -> dict:
        return {
            "credential_id": self.credential_id,
            "schema_id": self.schema_id,
            "credential_type": self.credential_type,
            "issuer": self.issuer,
            "subject": self.subject,
            "claims": self.claims,
            "issued_at": self.issued_at,
        }

    def signing_bytes(self) -> bytes:
        return canonical_serialize(self.body_dict())

    def to_dict(self) -> dict:
        record = self.body_dict()
        record["proof"] = {
            "signature_b58": base58_encode(self.signature),
            "verification_did": self.verification_did,
        }
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "VerifiableCredential":
        proof = record["proof"]
        return cls(
            credential_id=record["credential_id"],
            schema_id=record["schema_id"],
            credential_type=record["credential_type"],
            issuer=record["issuer"],
            subject=record["subject"],
            claims=dict(record["claims"]),
            issued_at=record["issued_at"],
            signature=base58_decode(proof["signature_b58"]),
            verification_did=proof["verification_did"],
        )


def _derive_credential_id(schema_id: str, issuer: str, subject: str,
                          claims: dict, issued_at: int) -> str:
    digest = sha256(canonical_serialize({
        "schema_id": schema_id,
        "issuer": issuer,
        "subject": subject,
        "claims": claims,
        "issued_at": issued_at,
    }))
    return "urn:glass:cred:" + base58_encode(digest)


def issue(issuer_keys: SigningKeypair, issuer_did: str, subject_did: str,
          schema: CredentialSchema, claims: dict,
          issued_at: int = 0) -> VerifiableCredential:
    """Create a credential signed by the issuer.

    Claims must satisfy the schema; violations raise ValidationError
    naming every offending attribute.
    """
    violations = validate_schema(claims, schema)
    if violations:
        raise ValidationError(violations)
    credential_id = _derive_credential_id(
        schema.schema_id, issuer_did, subject_did, claims, issued_at
    )
    unsigned = VerifiableCredential(
        credential_id=credential_id,
        schema_id=schema.schema_id,
        credential_type=schema.credential_type,
        issuer=issuer_did,
        subject=subject_did,
        claims=dict(claims),
        issued_at=issued_at,
        signature=b"",
        verification_did=issuer_did,
    )
    signature = sign(issuer_keys, unsigned.signing_bytes())
    return replace(unsigned, signature=signature)


# --- presentations ----------------------------------------------------------------

@dataclass(frozen=True)
class VerifiablePresentation:
    holder: str
    credentials: tuple[VerifiableCredential, ...]
    challenge: bytes
    signature: bytes

    def body_dict(self) -> dict:
        return {
            "holder": self.holder,
            "credentials": [vc.to_dict() for vc in self.credentials],
            "challenge_b58": base58_encode(self.challenge),
        }

    def signing_bytes(self) -> bytes:
        return canonical_serialize(self.body_dict())

    def to_dict(self) -> dict:
        record = self.body_dict()
        record["proof"] = {"signature_b58": base58_encode(self.signature)}
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "VerifiablePresentation":
        return cls(
            holder=record["holder"],
            credentials=tuple(
                VerifiableCredential.from_dict(c) for c in record["credentials"]
            ),
            challenge=base58_decode(record["challenge_b58"]),
            signature=base58_decode(record["proof"]["signature_b58"]),
        )


def present(holder_keys: SigningKeypair, holder_did: str,
            credentials: list[VerifiableCredential],
            challenge: bytes) -> VerifiablePresentation:
    """Wrap credentials in a holder-signed presentation bound to the
    verifier's challenge. The holder must be the subject of every one."""
    if not credentials:
        raise ValidationError(["a presentation needs at least one credential"])
    for vc in credentials:
        if vc.subject != holder_did:
            raise HolderMismatch(
                f"credential {vc.credential_id} belongs to {vc.subject}"
            )
    unsigned = VerifiablePresentation(
        holder=holder_did,
        credentials=tuple(credentials),
        challenge=challenge,
        signature=b"",
    )
    signature = sign(holder_keys, unsigned.signing_bytes())
    return VerifiablePresentation(
        holder=unsigned.holder,
        credentials=unsigned.credentials,
        challenge=challenge,
        signature=signature,
    )


# --- verification -----------------------------------------------------------------

@dataclass(frozen=True)
class CredentialCheck:
    credential_id: str
    issuer_trusted: bool
    signature_valid: bool
    schema_valid: bool
    reason: str

    @property
    def ok(self) -> bool:
        return self.issuer_trusted and self.signature_valid and self.schema_valid

    def to_dict(self) -> dict:
        return {
            "credential_id": self.credential_id,
            "issuer_trusted": self.issuer_trusted,
            "signature_valid": self.signature_valid,
            "schema_valid": self.schema_valid,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class VerificationReport:
    overall: bool
    reason: str
    per_credential: tuple[CredentialCheck, ...]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "reason": self.reason,
            "per_credential": [c.to_dict() for c in self.per_credential],
        }


def _failed_credential(vc: VerifiableCredential, reason: str,
                       issuer_trusted: bool = False, signature_valid: bool = False,
                       schema_valid: bool = False) -> CredentialCheck:
    return CredentialCheck(vc.credential_id, issuer_trusted, signature_valid,
                           schema_valid, reason)


def _check_credential(vc: VerifiableCredential, holder: str,
                      registry: RegistryView) -> CredentialCheck:
    if vc.subject != holder:
        return _failed_credential(vc, "holder-mismatch")
    issuer_doc = registry.resolve_did(vc.issuer)
    if issuer_doc is None:
        return _failed_credential(vc, "issuer-unresolvable")
    if not registry.is_trusted_issuer(vc.issuer, vc.credential_type):
        return _failed_credential(vc, "issuer-untrusted")
    schema = registry.get_schema(vc.schema_id)
    if schema is None:
        return _failed_credential(vc, "schema-unregistered", issuer_trusted=True)
    if schema.credential_type != vc.credential_type:
        return _failed_credential(vc, "credential-type-mismatch", issuer_trusted=True)
    violations = validate_schema(vc.claims, schema)
    if violations:
        return _failed_credential(
            vc, "schema-invalid: " + "; ".join(violations), issuer_trusted=True
        )
    issuer_public = base58_decode(issuer_doc["signing_public_b58"])
    if not verify(issuer_public, vc.signing_bytes(), vc.signature):
        return _failed_credential(
            vc, "signature-invalid", issuer_trusted=True, schema_valid=True
        )
    return CredentialCheck(vc.credential_id, True, True, True, "")


def verify_presentation(vp: VerifiablePresentation, expected_challenge: bytes,
                        registry: RegistryView) -> VerificationReport:
    """Full verification: challenge, holder signature, then per
    credential the issuer's registration, trust policy, schema and
    signature. Failures land in the report, never as exceptions."""
    if vp.challenge != expected_challenge:
        return VerificationReport(False, "challenge-mismatch", ())
    holder_doc = registry.resolve_did(vp.holder)
    if holder_doc is None:
        return VerificationReport(False, "holder-unresolvable", ())
    holder_public = base58_decode(holder_doc["signing_public_b58"])
    if not verify(holder_public, vp.signing_bytes(), vp.signature):
        return VerificationReport(False, "holder-signature-invalid", ())
    checks = tuple(
        _check_credential(vc, vp.holder, registry) for vc in vp.credentials
    )
    overall = bool(checks) and all(c.ok for c in checks)
    reason = "" if overall else "credential-checks-failed"
    if not checks:
        reason = "empty-presentation"
    return VerificationReport(overall, reason, checks)
