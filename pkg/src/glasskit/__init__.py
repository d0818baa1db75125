"""glasskit: a desk-scale credential data-sharing fabric.

Encrypted credentials are distributed over a private content-addressed
swarm; the (content id, wrapped key, uri) triplet that unlocks each one
is recorded on a permissioned ledger with org-scoped collection access;
trust registries bind issuers, schemas and verifier apps; and the full
issue, distribute, present, verify lifecycle runs deterministically
under a seed.
"""

from .canonical import canonical_parse, canonical_serialize
from .chaincode import (
    AUTHORITY_ORG,
    CredentialSchema,
    DidDocument,
    TrustPolicyEntry,
    did_for_signing_key,
)
from .cid import BlockSet, ContentId, build_dag, cid_of_block, reassemble
from .credential import (
    VerifiableCredential,
    VerifiablePresentation,
    VerificationReport,
    issue,
    present,
    validate_schema,
    verify_presentation,
)
from .crypto import (
    AgreementKeypair,
    ContentKey,
    SigningKeypair,
    WrappedKey,
    base58_decode,
    base58_encode,
    decrypt_content,
    encrypt_content,
    sha256,
    sign,
    unwrap_key,
    verify,
    wrap_key,
)
from .errors import GlassError
from .ledger import Channel, CollectionConfig, MemberIdentity, Org
from .portal import DistributionRecord, PortalSession, Wallet
from .swarm import Network, NodeHandle, NodeId, SwarmKey

__version__ = "0.1.0"
