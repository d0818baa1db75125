"""Portal orchestration: the credential lifecycle end to end.

Onboarding registers a wallet's DID; issuance signs a credential,
encrypts it under a fresh content key, distributes the ciphertext over
the private swarm, purges the plaintext from the portal's staging store
and records the triplet on the ledger with the key wrapped to the
subject. Retrieval reverses the path (both ledger reads are audited),
and presentation/verification runs against the live trust registry.

The content key is wrapped to the subject's agreement key: the portal
can read the wrapped key from the ledger but can never unwrap it.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .canonical import canonical_parse, canonical_serialize
from .chaincode import (
    GLASS_IPFS_CHAINCODE,
    REGISTRY_CHAINCODE,
    CredentialSchema,
    DidDocument,
    did_for_signing_key,
)
from .cid import DEFAULT_CHUNK_SIZE, ContentId, build_dag
from .credential import (
    VerifiableCredential,
    VerificationReport,
    present,
    verify_presentation,
)
from .credential import issue as issue_credential
from .crypto import (
    AgreementKeypair,
    ContentKey,
    SigningKeypair,
    WrappedKey,
    base58_decode,
    decrypt_content,
    encrypt_content,
    random_bytes,
    unwrap_key,
    verify,
    wrap_key,
)
from .errors import AccessDenied, NotFound, TrustError, UnsupportedUri
from .ledger import Channel, MemberIdentity, Receipt
from .swarm import NodeHandle

logger = logging.getLogger(__name__)

URI_SCHEME = "ipfs://"

# marks a purged plaintext slot in the staging store
TOMBSTONE = b"\x00tombstone\x00"


@dataclass
class Holding:
    credential_id: str
    cid: str
    uri: str

    def to_dict(self) -> dict:
        return {"credential_id": self.credential_id, "cid": self.cid,
                "uri": self.uri}

    @classmethod
    def from_dict(cls, record: dict) -> "Holding":
        return cls(record["credential_id"], record["cid"], record["uri"])


@dataclass
class Wallet:
    """Key management for one participant: a signing pair, an agreement
    pair for key unwrapping, and the list of held credential locations.
    Secrets leave this object only through the keystore file."""

    signing: SigningKeypair
    agreement: AgreementKeypair
    holdings: list[Holding] = field(default_factory=list)

    @property
    def did(self) -> str:
        return did_for_signing_key(self.signing.public)

    @classmethod
    def create(cls, rng: random.Random | None = None) -> "Wallet":
        return cls(
            signing=SigningKeypair.generate(rng),
            agreement=AgreementKeypair.generate(rng),
        )

    def did_document(self, kind: str) -> DidDocument:
        return DidDocument(
            did=self.did,
            signing_public=self.signing.public,
            agreement_public=self.agreement.public,
            kind=kind,
        )

    def to_dict(self) -> dict:
        return {
            "did": self.did,
            "signing": self.signing.to_dict(),
            "agreement": self.agreement.to_dict(),
            "holdings": [h.to_dict() for h in self.holdings],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Wallet":
        return cls(
            signing=SigningKeypair.from_dict(record["signing"]),
            agreement=AgreementKeypair.from_dict(record["agreement"]),
            holdings=[Holding.from_dict(h) for h in record.get("holdings", [])],
        )


@dataclass(frozen=True)
class DistributionRecord:
    """Everything issuance hands back: where the ciphertext lives, the
    wrapped key, and the ledger receipt for the recorded triplet."""

    credential_id: str
    cid: str
    uri: str
    wrapped_key: WrappedKey
    receipt: Receipt

    def to_dict(self) -> dict:
        return {
            "credential_id": self.credential_id,
            "cid": self.cid,
            "uri": self.uri,
            "wrapped_key": self.wrapped_key.to_dict(),
            "receipt": {
                "block_height": self.receipt.block_height,
                "tx_index": self.receipt.tx_index,
            },
        }


class ChannelRegistryView:
    """Registry adapter for verification.

    ``audited=True`` routes every query through submit so the verifier's
    registry lookups land in the ledger; ``audited=False`` evaluates
    read-only (used where a failed precondition must not grow the chain).
    """

    def __init__(self, channel: Channel, identity: MemberIdentity,
                 audited: bool = False):
        self._channel = channel
        self._identity = identity
        self._audited = audited

    def _query(self, function: str, args: list[bytes]):
        if self._audited:
            return self._channel.submit(
                self._identity, REGISTRY_CHAINCODE, function, args
            ).result
        return self._channel.evaluate(
            self._identity, REGISTRY_CHAINCODE, function, args
        )

    def resolve_did(self, did: str) -> dict | None:
        try:
            return self._query("resolve_did", [did.encode()])
        except NotFound:
            return None

    def is_trusted_issuer(self, did: str, credential_type: str) -> bool:
        return bool(self._query(
            "is_trusted_issuer", [did.encode(), credential_type.encode()]
        ))

    def is_trusted_app(self, did: str) -> bool:
        return bool(self._query("is_trusted_app", [did.encode()]))

    def get_schema(self, schema_id: str) -> CredentialSchema | None:
        try:
            record = self._query("get_schema", [schema_id.encode()])
        except NotFound:
            return None
        return CredentialSchema.from_dict(record)


@dataclass
class PortalSession:
    """One org's gateway to the channel and the swarm.

    Single-owner: a session must not be driven from multiple threads.
    The staging store briefly holds plaintext during issuance and is
    purged (tombstoned) the moment encryption completes.
    """

    channel: Channel
    identity: MemberIdentity
    node: NodeHandle
    rng: random.Random | None = None
    chunk_size: int = DEFAULT_CHUNK_SIZE
    staging: dict[str, bytes] = field(default_factory=dict)

    def registry_view(self, audited: bool = False) -> ChannelRegistryView:
        return ChannelRegistryView(self.channel, self.identity, audited=audited)

    # --- onboarding -----------------------------------------------------

    def onboard(self, wallet: Wallet, kind: str) -> str:
        """Register the wallet's DID document; returns the DID."""
        doc = wallet.did_document(kind)
        self.channel.submit(
            self.identity, REGISTRY_CHAINCODE, "register_did",
            [canonical_serialize(doc.to_dict())],
        )
        return doc.did

    # --- issuance -------------------------------------------------------

    def issue_and_distribute(self, issuer_wallet: Wallet, subject_did: str,
                             schema_id: str, claims: dict) -> DistributionRecord:
        """Issue, encrypt, distribute and record one credential.

        Trust is checked before anything is signed or encrypted; a swarm
        failure aborts before the ledger write, so a triplet never
        exists without its blocks.
        """
        registry = self.registry_view(audited=False)
        issuer_did = issuer_wallet.did
        if registry.resolve_did(issuer_did) is None:
            raise TrustError(f"issuer not onboarded: {issuer_did}")
        subject_doc = registry.resolve_did(subject_did)
        if subject_doc is None:
            raise NotFound(f"subject not onboarded: {subject_did}")
        schema = registry.get_schema(schema_id)
        if schema is None:
            raise NotFound(f"schema not registered: {schema_id}")
        if not registry.is_trusted_issuer(issuer_did, schema.credential_type):
            raise TrustError(
                f"issuer {issuer_did} not trusted for {schema.credential_type}"
            )

        credential = issue_credential(
            issuer_wallet.signing, issuer_did, subject_did, schema, claims,
            issued_at=self.channel.clock,
        )
        plaintext = canonical_serialize(credential.to_dict())
        self.staging[credential.credential_id] = plaintext

        content_key = ContentKey.generate(self.rng)
        ciphertext = encrypt_content(plaintext, content_key)
        # plaintext is deleted from the portal store once encryption completes
        self.staging[credential.credential_id] = TOMBSTONE

        root, blocks = build_dag(ciphertext, self.chunk_size)
        self.node.provide(blocks)

        wrapped = wrap_key(
            content_key,
            base58_decode(subject_doc["agreement_public_b58"]),
            self.rng,
        )
        uri = URI_SCHEME + root.text
        try:
            receipt = self.channel.submit(
                self.identity, GLASS_IPFS_CHAINCODE, "create_glass_resource",
                [root.text.encode(), uri.encode()],
                transient={"wrapped_key": canonical_serialize(wrapped.to_dict())},
            )
        except Exception:
            logger.warning(
                "ledger write failed after distribution; orphan blocks under %s",
                root.text,
            )
            raise
        return DistributionRecord(
            credential_id=credential.credential_id,
            cid=root.text,
            uri=uri,
            wrapped_key=wrapped,
            receipt=receipt,
        )

    # --- retrieval -------------------------------------------------------

    def retrieve_credential(self, subject_wallet: Wallet,
                            cid_text: str) -> VerifiableCredential:
        """Fetch, unwrap and decrypt one credential for its subject.

        Both ledger reads go through submit and are therefore audited.
        Sessions whose org lacks private-collection access are denied at
        the key read.
        """
        public = self.channel.submit(
            self.identity, GLASS_IPFS_CHAINCODE, "read_glass_resource",
            [cid_text.encode()],
        ).result
        wrapped_record = self.channel.submit(
            self.identity, GLASS_IPFS_CHAINCODE, "read_glass_resource_key",
            [cid_text.encode()],
        ).result

        uri = public["uri"]
        if not uri.startswith(URI_SCHEME):
            raise UnsupportedUri(f"cannot dispatch uri scheme: {uri}")
        ciphertext = self.node.fetch(ContentId.parse(cid_text))

        wrapped = WrappedKey.from_dict(wrapped_record)
        content_key = unwrap_key(wrapped, subject_wallet.agreement.secret)
        plaintext = decrypt_content(ciphertext, content_key)
        credential = VerifiableCredential.from_dict(canonical_parse(plaintext))

        issuer_doc = self.registry_view().resolve_did(credential.issuer)
        if issuer_doc is None:
            raise NotFound(f"issuer of retrieved credential unknown: "
                           f"{credential.issuer}")
        if not verify(base58_decode(issuer_doc["signing_public_b58"]),
                      credential.signing_bytes(), credential.signature):
            raise TrustError("retrieved credential has an invalid issuer signature")
        return credential

    # --- presentation ------------------------------------------------------

    def present_and_verify(self, holder_wallet: Wallet,
                           credentials: list[VerifiableCredential],
                           verifier_wallet: Wallet) -> VerificationReport:
        """Challenge, present, verify — with every registry query audited.

        The verifier must be registered as a trusted app or the exchange
        is refused outright.
        """
        audited = self.registry_view(audited=True)
        if not audited.is_trusted_app(verifier_wallet.did):
            raise AccessDenied(verifier_wallet.did, "trusted-apps")
        challenge = random_bytes(32, self.rng)
        vp = present(holder_wallet.signing, holder_wallet.did,
                     credentials, challenge)
        return verify_presentation(vp, challenge, audited)
