"""On-disk workspace: everything a CLI invocation needs to continue a run.

Layout::

    manifest.json     channel + swarm parameters (canonical, seed-stable)
    keystore/         org roots, member identities, wallets, swarm key
    ledger.jsonl      one block per line, canonical JSON
    collections.json  off-ledger collection values
    blocks/           swarm blocks as raw files named by cid text
    swarm.json        node states, routing tables, provider records
    trace.jsonl       swarm event log
    registry.json     registry dump derived from world state
    state.json        generator state for reproducible continuation

Loading replays ``ledger.jsonl`` from genesis, so the in-memory world
state is always the one the audit log proves. A lock file rejects
concurrent writers.
"""

from __future__ import annotations

import json
import os
import random
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .canonical import canonical_parse, canonical_serialize
from .chaincode import (
    AUTHORITY_ORG,
    default_collections,
    install_chaincodes,
    registry_dump_from_state,
)
from .cid import DEFAULT_CHUNK_SIZE, ContentId
from .crypto import SigningKeypair, base58_decode, base58_encode
from .errors import ConfigError, WorkspaceError, WorkspaceLocked
from .ledger import Channel, CollectionConfig, MemberIdentity, Org
from .portal import PortalSession, Wallet
from .swarm import (
    ALPHA_DEFAULT,
    K_DEFAULT,
    Network,
    NodeHandle,
    NodeId,
    RoutingTable,
    SwarmKey,
    NodeState,
)

ORG1 = "org1.org"
ORG2 = "org2.org"
DEFAULT_ORGS = (ORG1, ORG2, AUTHORITY_ORG)

_CONFIG_KEYS = {"seed", "chunk_size", "k", "alpha", "extra_swarm_peers"}


@dataclass(frozen=True)
class WorkspaceConfig:
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK_SIZE
    k: int = K_DEFAULT
    alpha: int = ALPHA_DEFAULT
    extra_swarm_peers: int = 2

    @classmethod
    def from_dict(cls, record: dict) -> "WorkspaceConfig":
        unknown = set(record) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        bad_types = [k for k, v in record.items()
                     if not isinstance(v, int) or isinstance(v, bool)]
        if bad_types:
            raise ConfigError(f"config values must be integers: {sorted(bad_types)}")
        return cls(**record)


def _rng_state_to_json(state) -> list:
    return [state[0], list(state[1]), state[2]]


def _rng_state_from_json(record) -> tuple:
    return (record[0], tuple(record[1]), record[2])


@dataclass
class Workspace:
    path: Path
    config: WorkspaceConfig
    swarm_key: SwarmKey
    channel: Channel
    network: Network
    members: dict[str, MemberIdentity]
    wallets: dict[str, Wallet] = field(default_factory=dict)
    rng: random.Random = field(default_factory=random.Random)
    org_nodes: dict[str, NodeHandle] = field(default_factory=dict)
    peer_nodes: list[NodeHandle] = field(default_factory=list)
    node_keys: list[SigningKeypair] = field(default_factory=list)

    # --- creation ---------------------------------------------------------

    @classmethod
    def create(cls, path: str | Path, config: WorkspaceConfig) -> "Workspace":
        path = Path(path)
        if (path / "manifest.json").exists():
            raise WorkspaceError(f"workspace already initialized: {path}")
        path.mkdir(parents=True, exist_ok=True)

        key_rng = random.Random(f"glasskit/{config.seed}/keys")
        swarm_key = SwarmKey.generate(key_rng)
        orgs = [Org(name, SigningKeypair.generate(key_rng))
                for name in DEFAULT_ORGS]
        collections = default_collections(ORG1, ORG2)
        channel = Channel.create(orgs, collections)
        install_chaincodes(channel)
        members = {
            org.name: channel.enroll(org.name, SigningKeypair.generate(key_rng))
            for org in orgs
        }

        network = Network(swarm_key, config.seed, k=config.k, alpha=config.alpha)
        workspace = cls(
            path=path,
            config=config,
            swarm_key=swarm_key,
            channel=channel,
            network=network,
            members=members,
            rng=random.Random(f"glasskit/{config.seed}/run"),
        )
        for name in DEFAULT_ORGS:
            keys = SigningKeypair.generate(key_rng)
            workspace.node_keys.append(keys)
            workspace.org_nodes[name] = network.join(keys, swarm_key)
        for _ in range(config.extra_swarm_peers):
            keys = SigningKeypair.generate(key_rng)
            workspace.node_keys.append(keys)
            workspace.peer_nodes.append(network.join(keys, swarm_key))

        workspace._write_manifest()
        workspace._write_keystore()
        workspace.save()
        return workspace

    # --- persistence -------------------------------------------------------

    def _write_manifest(self) -> None:
        manifest = {
            "version": 1,
            "seed": self.config.seed,
            "chunk_size": self.config.chunk_size,
            "k": self.config.k,
            "alpha": self.config.alpha,
            "extra_swarm_peers": self.config.extra_swarm_peers,
            "authority_org": AUTHORITY_ORG,
            "swarm_fingerprint_b58": base58_encode(self.swarm_key.fingerprint),
            "orgs": [
                {"name": org.name,
                 "root_public_b58": base58_encode(org.root.public)}
                for org in self.channel.orgs.values()
            ],
            "collections": [
                c.to_dict() for c in self.channel.collections.values()
            ],
        }
        (self.path / "manifest.json").write_bytes(
            canonical_serialize(manifest) + b"\n"
        )

    def _write_keystore(self) -> None:
        keystore = self.path / "keystore"
        keystore.mkdir(exist_ok=True)
        (keystore / "swarm_key.json").write_bytes(canonical_serialize(
            {"key_b58": base58_encode(self.swarm_key.key)}
        ))
        (keystore / "orgs.json").write_bytes(canonical_serialize(
            [org.to_dict() for org in self.channel.orgs.values()]
        ))
        (keystore / "members.json").write_bytes(canonical_serialize(
            {name: member.to_dict() for name, member in self.members.items()}
        ))
        (keystore / "nodes.json").write_bytes(canonical_serialize(
            [keys.to_dict() for keys in self.node_keys]
        ))

    def save(self) -> None:
        """Persist all mutable state after a command."""
        (self.path / "ledger.jsonl").write_bytes(self.channel.export_jsonl())
        (self.path / "collections.json").write_bytes(canonical_serialize({
            coll: {key: base58_encode(value)
                   for key, value in sorted(entries.items())}
            for coll, entries in sorted(self.channel.collection_values.items())
        }))
        (self.path / "registry.json").write_bytes(
            canonical_serialize(registry_dump_from_state(self.channel.state)) + b"\n"
        )
        (self.path / "trace.jsonl").write_bytes(self.network.export_trace())

        blocks_dir = self.path / "blocks"
        blocks_dir.mkdir(exist_ok=True)
        for state in self.network.nodes.values():
            for cid, data in state.blocks.items():
                block_path = blocks_dir / cid.text
                if not block_path.exists():
                    block_path.write_bytes(data)

        keystore = self.path / "keystore"
        (keystore / "wallets.json").write_bytes(canonical_serialize(
            {name: wallet.to_dict()
             for name, wallet in sorted(self.wallets.items())}
        ))

        node_records = []
        for keys in self.node_keys:
            node_id = NodeId.for_public_key(keys.public)
            state = self.network.nodes.get(node_id)
            if state is None:
                node_records.append({"public_b58": base58_encode(keys.public),
                                     "member": False})
                continue
            node_records.append({
                "public_b58": base58_encode(keys.public),
                "member": True,
                "blocks": sorted(cid.text for cid in state.blocks),
                "records": {
                    cid.text: sorted(p.text for p in providers)
                    for cid, providers in sorted(state.provider_records.items())
                },
                "buckets": {
                    str(i): [n.text for n in bucket]
                    for i, bucket in enumerate(state.table.buckets) if bucket
                },
            })
        swarm_state = {
            "rng_state": _rng_state_to_json(self.network.rng.getstate()),
            "messages": self.network.messages,
            "org_nodes": {org: base58_encode(h.keys.public)
                          for org, h in self.org_nodes.items()},
            "nodes": node_records,
            "trace": self.network.trace,
        }
        (self.path / "swarm.json").write_text(
            json.dumps(swarm_state, sort_keys=True), encoding="utf-8"
        )
        (self.path / "state.json").write_text(
            json.dumps({"rng_state": _rng_state_to_json(self.rng.getstate())}),
            encoding="utf-8",
        )

    # --- loading ------------------------------------------------------------

    @classmethod
    def load(cls, path: str | Path) -> "Workspace":
        path = Path(path)
        manifest_path = path / "manifest.json"
        if not manifest_path.exists():
            raise WorkspaceError(f"not a workspace (no manifest): {path}")
        manifest = canonical_parse(manifest_path.read_bytes())
        config = WorkspaceConfig(
            seed=manifest["seed"],
            chunk_size=manifest["chunk_size"],
            k=manifest["k"],
            alpha=manifest["alpha"],
            extra_swarm_peers=manifest["extra_swarm_peers"],
        )
        keystore = path / "keystore"
        swarm_key = SwarmKey(base58_decode(
            canonical_parse((keystore / "swarm_key.json").read_bytes())["key_b58"]
        ))
        orgs = [Org.from_dict(r) for r in
                canonical_parse((keystore / "orgs.json").read_bytes())]
        collections = [CollectionConfig.from_dict(r)
                       for r in manifest["collections"]]

        coll_values = {
            coll: {key: base58_decode(value) for key, value in entries.items()}
            for coll, entries in canonical_parse(
                (path / "collections.json").read_bytes()
            ).items()
        }
        channel = Channel.replay(
            orgs, collections, (path / "ledger.jsonl").read_bytes(), coll_values
        )
        install_chaincodes(channel)
        members = {
            name: MemberIdentity.from_dict(record)
            for name, record in canonical_parse(
                (keystore / "members.json").read_bytes()
            ).items()
        }
        node_keys = [SigningKeypair.from_dict(r) for r in
                     canonical_parse((keystore / "nodes.json").read_bytes())]

        swarm_state = json.loads((path / "swarm.json").read_text(encoding="utf-8"))
        network = Network(swarm_key, config.seed, k=config.k, alpha=config.alpha)
        network.rng.setstate(_rng_state_from_json(swarm_state["rng_state"]))
        network.messages = swarm_state["messages"]
        network.trace = list(swarm_state["trace"])

        blocks_dir = path / "blocks"
        keys_by_public = {base58_encode(k.public): k for k in node_keys}
        for record in swarm_state["nodes"]:
            keys = keys_by_public[record["public_b58"]]
            node_id = NodeId.for_public_key(keys.public)
            if not record["member"]:
                continue
            state = NodeState(node_id, RoutingTable(node_id, config.k))
            for index, bucket in record["buckets"].items():
                state.table.buckets[int(index)] = [
                    NodeId(base58_decode(t)) for t in bucket
                ]
            for cid_text in record["blocks"]:
                cid = ContentId.parse(cid_text)
                state.blocks[cid] = (blocks_dir / cid_text).read_bytes()
            for cid_text, providers in record["records"].items():
                state.provider_records[ContentId.parse(cid_text)] = {
                    NodeId(base58_decode(t)) for t in providers
                }
            network.nodes[node_id] = state

        workspace = cls(
            path=path,
            config=config,
            swarm_key=swarm_key,
            channel=channel,
            network=network,
            members=members,
            node_keys=node_keys,
        )
        workspace.rng.setstate(_rng_state_from_json(
            json.loads((path / "state.json").read_text())["rng_state"]
        ))
        for org, public_b58 in swarm_state["org_nodes"].items():
            handle = NodeHandle(network, keys_by_public[public_b58])
            workspace.org_nodes[org] = handle
        org_publics = set(swarm_state["org_nodes"].values())
        for keys in node_keys:
            if base58_encode(keys.public) not in org_publics:
                workspace.peer_nodes.append(NodeHandle(network, keys))

        wallets_path = keystore / "wallets.json"
        if wallets_path.exists():
            workspace.wallets = {
                name: Wallet.from_dict(record)
                for name, record in canonical_parse(
                    wallets_path.read_bytes()
                ).items()
            }
        return workspace

    # --- operations -----------------------------------------------------------

    def session_for(self, org: str) -> PortalSession:
        if org not in self.members:
            raise WorkspaceError(f"no enrolled member for org: {org}")
        return PortalSession(
            channel=self.channel,
            identity=self.members[org],
            node=self.org_nodes[org],
            rng=self.rng,
            chunk_size=self.config.chunk_size,
        )

    def create_wallet(self, name: str) -> Wallet:
        if name in self.wallets:
            raise WorkspaceError(f"wallet already exists: {name}")
        wallet = Wallet.create(self.rng)
        self.wallets[name] = wallet
        return wallet

    def wallet(self, name: str) -> Wallet:
        try:
            return self.wallets[name]
        except KeyError:
            raise WorkspaceError(f"unknown wallet: {name}") from None

    def registry_dump(self) -> dict:
        return registry_dump_from_state(self.channel.state)


@contextmanager
def workspace_lock(path: str | Path):
    """Exclusive workspace lock; a second writer fails fast."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    lock_path = path / ".lock"
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise WorkspaceLocked(
            f"workspace is locked by another process: {lock_path}"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)
