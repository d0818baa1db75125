from __future__ import annotations

import random
from dataclasses import dataclass, field

import pytest

from glasskit.canonical import canonical_serialize
from glasskit.chaincode import (
    AUTHORITY_ORG,
    REGISTRY_CHAINCODE,
    CredentialSchema,
    TrustPolicyEntry,
    default_collections,
    install_chaincodes,
)
from glasskit.crypto import SigningKeypair
from glasskit.ledger import Channel, MemberIdentity, Org
from glasskit.portal import PortalSession, Wallet
from glasskit.swarm import Network, NodeHandle, SwarmKey

ORG1 = "org1.org"
ORG2 = "org2.org"

DIPLOMA_SCHEMA = CredentialSchema(
    schema_id="glass.academic.diploma.v1",
    credential_type="AC",
    required=(("name", "text"), ("degree", "text"), ("award_date", "date")),
    optional=(("grade", "text"),),
)


@dataclass
class Fabric:
    """Everything one in-memory deployment needs: channel, swarm, one
    enrolled member and one swarm node per org."""

    rng: random.Random
    swarm_key: SwarmKey
    channel: Channel
    network: Network
    members: dict[str, MemberIdentity]
    nodes: dict[str, NodeHandle]
    extra_nodes: list[NodeHandle] = field(default_factory=list)

    def session(self, org: str = ORG1, chunk_size: int = 1024) -> PortalSession:
        return PortalSession(
            channel=self.channel,
            identity=self.members[org],
            node=self.nodes[org],
            rng=self.rng,
            chunk_size=chunk_size,
        )

    def submit_registry(self, function: str, args: list[bytes],
                        org: str = AUTHORITY_ORG):
        return self.channel.submit(
            self.members[org], REGISTRY_CHAINCODE, function, args
        )

    def register_schema(self, schema: CredentialSchema) -> None:
        self.submit_registry(
            "register_schema", [canonical_serialize(schema.to_dict())]
        )

    def register_issuer(self, wallet: Wallet, types: set[str],
                        domain: str = "PT") -> None:
        entry = TrustPolicyEntry(wallet.did, domain, frozenset(types))
        self.submit_registry(
            "register_trusted_issuer", [canonical_serialize(entry.to_dict())]
        )

    def register_app(self, wallet: Wallet) -> None:
        self.submit_registry("register_trusted_app", [wallet.did.encode()])


def make_fabric(seed: int = 7, extra_peers: int = 2) -> Fabric:
    rng = random.Random(seed)
    swarm_key = SwarmKey.generate(rng)
    orgs = [Org(name, SigningKeypair.generate(rng))
            for name in (ORG1, ORG2, AUTHORITY_ORG)]
    channel = Channel.create(orgs, default_collections(ORG1, ORG2))
    install_chaincodes(channel)
    members = {
        org.name: channel.enroll(org.name, SigningKeypair.generate(rng))
        for org in orgs
    }
    network = Network(swarm_key, seed=seed)
    nodes = {
        org.name: network.join(SigningKeypair.generate(rng), swarm_key)
        for org in orgs
    }
    extra = [network.join(SigningKeypair.generate(rng), swarm_key)
             for _ in range(extra_peers)]
    return Fabric(rng, swarm_key, channel, network, members, nodes, extra)


@pytest.fixture
def fabric() -> Fabric:
    return make_fabric()


@dataclass
class DiplomaWorld:
    fabric: Fabric
    student: Wallet
    university: Wallet
    employer: Wallet


def make_diploma_world(seed: int = 7) -> DiplomaWorld:
    """Fabric plus onboarded actors, AC schema, trusted issuer and app."""
    fab = make_fabric(seed)
    session = fab.session()
    student, university, employer = (Wallet.create(fab.rng) for _ in range(3))
    session.onboard(student, "natural_person")
    session.onboard(university, "legal_person")
    session.onboard(employer, "legal_person")
    fab.register_schema(DIPLOMA_SCHEMA)
    fab.register_issuer(university, {"AC"})
    fab.register_app(employer)
    return DiplomaWorld(fab, student, university, employer)


@pytest.fixture
def diploma_world() -> DiplomaWorld:
    return make_diploma_world()


DIPLOMA_CLAIMS = {
    "name": "Alice Example",
    "degree": "MSc Computer Science",
    "award_date": "2024-06-28",
    "grade": "distinction",
}
