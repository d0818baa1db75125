"""The two installed chaincodes.

``glass-ipfs`` keeps the triplet for each encrypted resource: the public
collection holds (cid, uri) readable by every org, the private
collection holds the wrapped encryption key under an org-scoped read
policy. ``glass-registry`` is the trust side: DID documents, credential
schemas, the issuer trust policy and the trusted-apps list, all in
public world state so anyone on the channel can resolve them. Registry
mutations are restricted to the accreditation authority org.

Triplets are immutable: there is no update or delete function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .canonical import canonical_parse, canonical_serialize
from .crypto import base58_decode, base58_encode, sha256
from .errors import (
    AccessDenied,
    AlreadyExists,
    InvalidDid,
    NotFound,
    ValidationError,
)
from .ledger import ChaincodeContext

GLASS_IPFS_CHAINCODE = "glass-ipfs"
REGISTRY_CHAINCODE = "glass-registry"

PUBLIC_COLLECTION = "glass-public"
PRIVATE_COLLECTION = "glass-private"

# The org holding the accreditation-authority role: the only writer of
# issuer, schema and app registries.
AUTHORITY_ORG = "accreditation.org"

DID_PREFIX = "did:glass:"
_MULTIHASH_PREFIX = b"\x12\x20"
_COUNTRY_DOMAIN_RE = re.compile(r"^[A-Z]{2}(\.[A-Za-z_]+)*$")
_ATTRIBUTE_KINDS = ("text", "integer", "date")


def did_for_signing_key(signing_public: bytes) -> str:
    """Derive the DID bound to an Ed25519 public key."""
    return DID_PREFIX + base58_encode(_MULTIHASH_PREFIX + sha256(signing_public))


@dataclass(frozen=True)
class DidDocument:
    did: str
    signing_public: bytes
    agreement_public: bytes
    kind: str  # "natural_person" | "legal_person"

    def to_dict(self) -> dict:
        return {
            "did": self.did,
            "signing_public_b58": base58_encode(self.signing_public),
            "agreement_public_b58": base58_encode(self.agreement_public),
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "DidDocument":
        return cls(
            did=record["did"],
            signing_public=base58_decode(record["signing_public_b58"]),
            agreement_public=base58_decode(record["agreement_public_b58"]),
            kind=record["kind"],
        )


@dataclass(frozen=True)
class CredentialSchema:
    """Attribute shape for one credential type: required core attributes
    plus the optional ones; nothing else is allowed in claims."""

    schema_id: str
    credential_type: str
    required: tuple[tuple[str, str], ...]
    optional: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.required] + [n for n, _ in self.optional]
        if len(set(names)) != len(names):
            raise ValidationError(["duplicate attribute names in schema"])
        for name, kind in list(self.required) + list(self.optional):
            if kind not in _ATTRIBUTE_KINDS:
                raise ValidationError(
                    [f"attribute {name}: unknown kind {kind!r}"]
                )

    def to_dict(self) -> dict:
        return {
            "schema_id": self.schema_id,
            "credential_type": self.credential_type,
            "required": [{"name": n, "kind": k} for n, k in self.required],
            "optional": [{"name": n, "kind": k} for n, k in self.optional],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "CredentialSchema":
        return cls(
            schema_id=record["schema_id"],
            credential_type=record["credential_type"],
            required=tuple((a["name"], a["kind"]) for a in record["required"]),
            optional=tuple((a["name"], a["kind"]) for a in record.get("optional", [])),
        )


@dataclass(frozen=True)
class TrustPolicyEntry:
    """Which credential types one issuer may sign, within a country domain."""

    issuer: str
    country_domain: str
    permitted_types: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "issuer": self.issuer,
            "country_domain": self.country_domain,
            "permitted_types": sorted(self.permitted_types),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "TrustPolicyEntry":
        return cls(record["issuer"], record["country_domain"],
                   frozenset(record["permitted_types"]))


# --- state keys ---------------------------------------------------------------

def _did_key(did: str) -> str:
    return f"did/{did}"


def _schema_key(schema_id: str) -> str:
    return f"schema/{schema_id}"


def _issuer_key(did: str) -> str:
    return f"issuer/{did}"


def _app_key(did: str) -> str:
    return f"app/{did}"


def _require_authority(ctx: ChaincodeContext) -> None:
    if ctx.org != AUTHORITY_ORG:
        raise AccessDenied(ctx.org, "trust-registry")


def _text(arg: bytes) -> str:
    return arg.decode("utf-8")


# --- glass-ipfs: the triplet store ---------------------------------------------

def create_glass_resource(ctx: ChaincodeContext, cid: bytes, uri: bytes) -> dict:
    """Insert a new triplet. (cid, uri) goes to the public collection,
    the wrapped key (a transient input, never recorded raw) to the
    private one. Fails if the cid is already present."""
    cid_text, uri_text = _text(cid), _text(uri)
    if not cid_text or not uri_text:
        raise ValidationError(["cid and uri must be non-empty"])
    wrapped = ctx.transient.get("wrapped_key")
    if wrapped is None:
        raise ValidationError(["missing transient input: wrapped_key"])
    if ctx.collection_has(PUBLIC_COLLECTION, cid_text):
        raise AlreadyExists(f"triplet already recorded for {cid_text}")
    ctx.collection_put(
        PUBLIC_COLLECTION, cid_text,
        canonical_serialize({"cid": cid_text, "uri": uri_text}),
    )
    ctx.collection_put(PRIVATE_COLLECTION, cid_text, wrapped)
    return {"cid": cid_text, "uri": uri_text}


def read_glass_resource(ctx: ChaincodeContext, cid: bytes) -> dict:
    """Public half of a triplet: (cid, uri)."""
    cid_text = _text(cid)
    record = ctx.collection_get(PUBLIC_COLLECTION, cid_text)
    if record is None:
        raise NotFound(f"no triplet for {cid_text}")
    return canonical_parse(record)


def read_glass_resource_key(ctx: ChaincodeContext, cid: bytes) -> dict:
    """Private half of a triplet: the wrapped encryption key.

    The read policy is checked before existence, so an org without key
    access learns nothing, not even whether the triplet exists.
    """
    cid_text = _text(cid)
    wrapped = ctx.collection_get(PRIVATE_COLLECTION, cid_text)
    if wrapped is None:
        raise NotFound(f"no triplet for {cid_text}")
    return canonical_parse(wrapped)


# --- glass-registry: DIDs, schemas, trust policy, apps ---------------------------

def register_did(ctx: ChaincodeContext, doc: bytes) -> dict:
    document = DidDocument.from_dict(canonical_parse(doc))
    if document.kind not in ("natural_person", "legal_person"):
        raise ValidationError([f"unknown did kind: {document.kind}"])
    if document.did != did_for_signing_key(document.signing_public):
        raise InvalidDid(f"did does not derive from the signing key: {document.did}")
    key = _did_key(document.did)
    if ctx.get_state(key) is not None:
        raise AlreadyExists(f"did already registered: {document.did}")
    ctx.put_state(key, document.to_dict())
    return {"did": document.did}


def resolve_did(ctx: ChaincodeContext, did: bytes) -> dict:
    record = ctx.get_state(_did_key(_text(did)))
    if record is None:
        raise NotFound(f"unknown did: {_text(did)}")
    return record


def register_schema(ctx: ChaincodeContext, schema: bytes) -> dict:
    _require_authority(ctx)
    parsed = CredentialSchema.from_dict(canonical_parse(schema))
    key = _schema_key(parsed.schema_id)
    if ctx.get_state(key) is not None:
        raise AlreadyExists(f"schema already registered: {parsed.schema_id}")
    ctx.put_state(key, parsed.to_dict())
    return {"schema_id": parsed.schema_id}


def get_schema(ctx: ChaincodeContext, schema_id: bytes) -> dict:
    record = ctx.get_state(_schema_key(_text(schema_id)))
    if record is None:
        raise NotFound(f"unknown schema: {_text(schema_id)}")
    return record


def register_trusted_issuer(ctx: ChaincodeContext, entry: bytes) -> dict:
    _require_authority(ctx)
    parsed = TrustPolicyEntry.from_dict(canonical_parse(entry))
    if not parsed.permitted_types:
        raise ValidationError(["permitted_types must not be empty"])
    if not _COUNTRY_DOMAIN_RE.match(parsed.country_domain):
        raise ValidationError(
            [f"invalid country domain: {parsed.country_domain!r}"]
        )
    if ctx.get_state(_did_key(parsed.issuer)) is None:
        raise NotFound(f"issuer did not registered: {parsed.issuer}")
    key = _issuer_key(parsed.issuer)
    if ctx.get_state(key) is not None:
        raise AlreadyExists(f"issuer already in trust policy: {parsed.issuer}")
    ctx.put_state(key, parsed.to_dict())
    return {"issuer": parsed.issuer}


def register_trusted_app(ctx: ChaincodeContext, did: bytes) -> dict:
    _require_authority(ctx)
    did_text = _text(did)
    if ctx.get_state(_did_key(did_text)) is None:
        raise NotFound(f"app did not registered: {did_text}")
    key = _app_key(did_text)
    if ctx.get_state(key) is not None:
        raise AlreadyExists(f"app already registered: {did_text}")
    ctx.put_state(key, True)
    return {"did": did_text}


def is_trusted_issuer(ctx: ChaincodeContext, did: bytes, credential_type: bytes) -> bool:
    record = ctx.get_state(_issuer_key(_text(did)))
    if record is None:
        return False
    return _text(credential_type) in record["permitted_types"]


def is_trusted_app(ctx: ChaincodeContext, did: bytes) -> bool:
    return ctx.get_state(_app_key(_text(did))) is True


def registry_dump_from_state(state: dict) -> dict:
    """Registry snapshot grouped by kind, from raw world-state entries."""
    dids: dict[str, dict] = {}
    schemas: dict[str, dict] = {}
    issuers: dict[str, dict] = {}
    apps: list[str] = []
    for key in sorted(state):
        value = state[key]
        if key.startswith("did/"):
            dids[key[4:]] = value
        elif key.startswith("schema/"):
            schemas[key[7:]] = value
        elif key.startswith("issuer/"):
            issuers[key[7:]] = value
        elif key.startswith("app/") and value is True:
            apps.append(key[4:])
    return {"dids": dids, "schemas": schemas, "issuers": issuers, "apps": apps}


def dump_registry(ctx: ChaincodeContext) -> dict:
    """Whole registry state for offline verification tooling."""
    return registry_dump_from_state(
        {key: ctx.get_state(key) for key in ctx.state_keys()}
    )


GLASS_IPFS_FUNCTIONS = {
    "create_glass_resource": create_glass_resource,
    "read_glass_resource": read_glass_resource,
    "read_glass_resource_key": read_glass_resource_key,
}

REGISTRY_FUNCTIONS = {
    "register_did": register_did,
    "resolve_did": resolve_did,
    "register_schema": register_schema,
    "get_schema": get_schema,
    "register_trusted_issuer": register_trusted_issuer,
    "register_trusted_app": register_trusted_app,
    "is_trusted_issuer": is_trusted_issuer,
    "is_trusted_app": is_trusted_app,
    "dump_registry": dump_registry,
}


def install_chaincodes(channel) -> None:
    channel.install(GLASS_IPFS_CHAINCODE, GLASS_IPFS_FUNCTIONS)
    channel.install(REGISTRY_CHAINCODE, REGISTRY_FUNCTIONS)


def default_collections(org1: str, org2: str) -> list:
    """The two-collection layout: public pair readable by both orgs,
    wrapped keys readable only by the first."""
    from .ledger import CollectionConfig

    return [
        CollectionConfig(
            name=PUBLIC_COLLECTION,
            readers=frozenset({org1, org2}),
            writers=frozenset({org1, org2}),
        ),
        CollectionConfig(
            name=PRIVATE_COLLECTION,
            readers=frozenset({org1}),
            writers=frozenset({org1, org2}),
        ),
    ]
