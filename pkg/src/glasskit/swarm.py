"""Simulated private peer-to-peer content network.

Membership is gated by possession of a shared swarm key; admitted nodes
locate content through Kademlia-style XOR-distance routing and exchange
blocks via want-lists, verifying every block hash before accepting it.
The whole network runs in-process as a deterministic simulation: a
seeded generator drives every scheduling choice, so a scenario replays
to a byte-identical event trace.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .canonical import canonical_serialize
from .cid import BlockSet, ContentId, cid_of_block, decode_interior, reassemble
from .crypto import SigningKeypair, base58_encode, random_bytes, sha256
from .errors import BlockCorrupt, ContentUnavailable, SwarmRejected

K_DEFAULT = 20
ALPHA_DEFAULT = 3
_ID_BITS = 256


@dataclass(frozen=True)
class SwarmKey:
    """Shared secret gating membership; only its fingerprint travels."""

    key: bytes

    def __post_init__(self):
        if len(self.key) != 32:
            raise ValueError("swarm key must be 32 bytes")

    @property
    def fingerprint(self) -> bytes:
        return sha256(self.key)

    @classmethod
    def generate(cls, rng: random.Random | None = None) -> "SwarmKey":
        return cls(random_bytes(32, rng))


@dataclass(frozen=True)
class NodeId:
    """Stable node address: sha256 of the node's signing public key."""

    id: bytes

    def __post_init__(self):
        if len(self.id) != 32:
            raise ValueError("node id must be a 32-byte digest")
        # integer form cached once: XOR ranking dominates lookup time
        object.__setattr__(self, "num", int.from_bytes(self.id, "big"))

    @classmethod
    def for_public_key(cls, public: bytes) -> "NodeId":
        return cls(sha256(public))

    @property
    def text(self) -> str:
        return base58_encode(self.id)

    def __lt__(self, other: "NodeId") -> bool:
        return self.id < other.id

    def __repr__(self) -> str:
        return f"NodeId({self.text[:12]})"


def xor_distance(a: bytes, b: bytes) -> int:
    return int.from_bytes(a, "big") ^ int.from_bytes(b, "big")


def content_key_digest(cid: ContentId) -> bytes:
    """Point in the id space where provider records for ``cid`` live."""
    return sha256(cid.multihash)


class RoutingTable:
    """256 recency-ordered k-buckets; bucket i holds ids whose XOR distance
    to the owner has its highest set bit at position i."""

    def __init__(self, owner: NodeId, k: int = K_DEFAULT):
        self.owner = owner
        self.k = k
        self.buckets: list[list[NodeId]] = [[] for _ in range(_ID_BITS)]

    def _bucket_index(self, node: NodeId) -> int:
        return (self.owner.num ^ node.num).bit_length() - 1

    def insert(self, node: NodeId) -> None:
        """Record contact with ``node``; full buckets drop the newcomer
        (simulated nodes never fail, so there is nothing to evict)."""
        if node == self.owner:
            return
        bucket = self.buckets[self._bucket_index(node)]
        if node in bucket:
            if bucket[-1] != node:
                bucket.remove(node)
                bucket.append(node)
        elif len(bucket) < self.k:
            bucket.append(node)

    def known(self) -> list[NodeId]:
        return [node for bucket in self.buckets for node in bucket]

    def closest(self, target: int, count: int) -> list[NodeId]:
        return sorted(
            self.known(), key=lambda n: (n.num ^ target, n.id)
        )[:count]


@dataclass
class NodeState:
    node_id: NodeId
    table: RoutingTable
    blocks: BlockSet = field(default_factory=dict)
    provider_records: dict[ContentId, set[NodeId]] = field(default_factory=dict)


@dataclass(frozen=True)
class WantList:
    """Ordered set of block ids a node is asking its peers for."""

    requester: NodeId
    cids: tuple[ContentId, ...]

    def __post_init__(self):
        if len(set(self.cids)) != len(self.cids):
            raise ValueError("want list must not contain duplicates")


class Network:
    """Deterministic in-process swarm. Single-threaded by contract: node
    handles must not be driven concurrently; snapshots may be shared."""

    def __init__(self, swarm_key: SwarmKey, seed: int,
                 k: int = K_DEFAULT, alpha: int = ALPHA_DEFAULT):
        self.fingerprint = swarm_key.fingerprint
        self.seed = seed
        self.k = k
        self.alpha = alpha
        self.rng = random.Random(seed)
        self.nodes: dict[NodeId, NodeState] = {}
        self.trace: list[dict] = []
        self.messages = 0

    @classmethod
    def create(cls, swarm_key: SwarmKey, seed: int, **params) -> "Network":
        return cls(swarm_key, seed, **params)

    def node(self, keys: SigningKeypair) -> "NodeHandle":
        return NodeHandle(self, keys)

    def join(self, keys: SigningKeypair, presented_key: SwarmKey) -> "NodeHandle":
        return self.node(keys).join(presented_key)

    def member_count(self) -> int:
        return len(self.nodes)

    # --- trace -----------------------------------------------------------

    def _event(self, kind: str, **fields) -> None:
        event = {"seq": len(self.trace), "event": kind}
        event.update(fields)
        self.trace.append(event)

    def export_trace(self) -> bytes:
        """Ordered event log as canonical JSON lines."""
        return b"\n".join(canonical_serialize(e) for e in self.trace) + (
            b"\n" if self.trace else b""
        )

    # --- message-level protocol (simulated RPCs) ---------------------------

    def _deliver(self, sender: NodeId, receiver: NodeId) -> NodeState:
        self.messages += 1
        state = self.nodes[receiver]
        state.table.insert(sender)
        return state

    def _rpc_find(self, sender: NodeId, receiver: NodeId, target: int,
                  cid: ContentId | None) -> tuple[list[NodeId], set[NodeId]]:
        """FIND round-trip: k closest ids the receiver knows, plus its
        provider records for ``cid`` when one is being looked up."""
        state = self._deliver(sender, receiver)
        closer = state.table.closest(target, self.k)
        providers = set(state.provider_records.get(cid, set())) if cid else set()
        return closer, providers

    def _rpc_add_provider(self, sender: NodeId, receiver: NodeId,
                          cid: ContentId, provider: NodeId) -> None:
        state = self._deliver(sender, receiver)
        state.provider_records.setdefault(cid, set()).add(provider)

    def _rpc_get_block(self, sender: NodeId, receiver: NodeId,
                       cid: ContentId) -> bytes | None:
        state = self._deliver(sender, receiver)
        return state.blocks.get(cid)

    # --- iterative lookup ---------------------------------------------------

    def _lookup(self, origin: NodeState, target: bytes,
                cid: ContentId | None = None) -> tuple[list[NodeId], set[NodeId], int]:
        """Iterative Kademlia lookup from ``origin`` toward ``target``.

        Queries alpha closest unvisited candidates per round, merging the
        returned ids, until the k closest candidates have all been
        queried. Returns (k closest ids, union of provider records seen,
        nodes visited). The origin counts as visited.
        """
        target_num = int.from_bytes(target, "big")

        def rank(node: NodeId):
            return (node.num ^ target_num, node.id)

        candidates: set[NodeId] = {origin.node_id}
        candidates.update(origin.table.known())
        queried: set[NodeId] = {origin.node_id}
        providers: set[NodeId] = set(origin.provider_records.get(cid, set())) if cid else set()

        while True:
            ordered = sorted(candidates, key=rank)
            top = ordered[: self.k]
            pending = [n for n in top if n not in queried]
            if not pending:
                return top, providers, len(queried)
            for node in pending[: self.alpha]:
                queried.add(node)
                closer, found = self._rpc_find(
                    origin.node_id, node, target_num, cid
                )
                providers.update(found)
                for candidate in closer:
                    if candidate not in candidates and candidate in self.nodes:
                        candidates.add(candidate)
                        origin.table.insert(candidate)


class NodeHandle:
    """A single node's view of the network. Created unjoined; every
    operation requires current membership and raises ``SwarmRejected``
    otherwise, so a rejected node can never observe member state."""

    def __init__(self, network: Network, keys: SigningKeypair):
        self.network = network
        self.keys = keys
        self.node_id = NodeId.for_public_key(keys.public)

    # --- membership -----------------------------------------------------

    @property
    def member(self) -> bool:
        return self.node_id in self.network.nodes

    def _state(self) -> NodeState:
        state = self.network.nodes.get(self.node_id)
        if state is None:
            raise SwarmRejected("node is not a member of this swarm")
        return state

    def join(self, presented_key: SwarmKey) -> "NodeHandle":
        """Join iff the presented key matches the network's swarm key.

        The admitted node seeds its routing table from up to k existing
        members (chosen by the seeded scheduler), announces itself to
        them, then runs a self-lookup to learn its neighbourhood.
        """
        net = self.network
        if presented_key.fingerprint != net.fingerprint:
            net._event("join", node=self.node_id.text, ok=False)
            raise SwarmRejected("swarm key fingerprint mismatch")
        if self.member:
            return self
        existing = sorted(net.nodes)
        state = NodeState(self.node_id, RoutingTable(self.node_id, net.k))
        net.nodes[self.node_id] = state
        seeds = net.rng.sample(existing, min(net.k, len(existing)))
        for seed in seeds:
            state.table.insert(seed)
            net.nodes[seed].table.insert(self.node_id)
        if seeds:
            net._lookup(state, self.node_id.id)
        net._event(
            "join",
            node=self.node_id.text,
            ok=True,
            seeds=sorted(s.text for s in seeds),
        )
        return self

    # --- content operations ----------------------------------------------

    def provide(self, blocks: BlockSet) -> list[ContentId]:
        """Store ``blocks`` locally and publish provider records for each
        to the alpha closest nodes in the record's key space."""
        state = self._state()
        stored: list[ContentId] = []
        for cid in sorted(blocks):
            data = blocks[cid]
            if cid_of_block(data) != cid:
                raise BlockCorrupt(cid.text)
            state.blocks[cid] = data
            stored.append(cid)
            self._publish_record(state, cid)
        self.network._event(
            "provide", node=self.node_id.text, cids=[c.text for c in stored]
        )
        return stored

    def _publish_record(self, state: NodeState, cid: ContentId) -> None:
        target = content_key_digest(cid)
        closest, _, _ = self.network._lookup(state, target)
        for holder in closest[: self.network.alpha]:
            if holder == self.node_id:
                state.provider_records.setdefault(cid, set()).add(self.node_id)
            else:
                self.network._rpc_add_provider(
                    self.node_id, holder, cid, self.node_id
                )

    def find_providers(self, cid: ContentId) -> set[NodeId]:
        """Iterative provider lookup; empty set when nothing is advertised."""
        state = self._state()
        _, providers, visited = self.network._lookup(
            state, content_key_digest(cid), cid
        )
        self.network._event(
            "lookup",
            node=self.node_id.text,
            cid=cid.text,
            providers=sorted(p.text for p in providers),
            visited=visited,
        )
        return providers

    def _fetch_block(self, state: NodeState, cid: ContentId) -> bytes:
        local = state.blocks.get(cid)
        if local is not None and cid_of_block(local) == cid:
            return local
        providers = self.find_providers(cid)
        saw_corruption = False
        for provider in sorted(providers):
            if provider == self.node_id:
                continue
            data = self.network._rpc_get_block(self.node_id, provider, cid)
            if data is None:
                continue
            if cid_of_block(data) != cid:
                saw_corruption = True
                continue
            return data
        if saw_corruption:
            raise BlockCorrupt(cid.text)
        raise ContentUnavailable(cid.text)

    def fetch(self, root: ContentId) -> bytes:
        """Retrieve and verify the full DAG under ``root``.

        Maintains a want-list seeded with the root, extending it with the
        links of each interior node as blocks arrive. Corrupt replicas
        are skipped in favour of honest ones. Fetched blocks are stored
        and re-provided, making this node a distributor of the content.
        """
        state = self._state()
        want: deque[ContentId] = deque([root])
        wanted: set[ContentId] = {root}
        want_order: list[ContentId] = [root]
        while want:
            cid = want.popleft()
            data = self._fetch_block(state, cid)
            state.blocks[cid] = data
            interior = decode_interior(data)
            if interior is not None:
                for link in interior[0]:
                    if link not in wanted:
                        wanted.add(link)
                        want.append(link)
                        want_order.append(link)
        want_list = WantList(self.node_id, tuple(want_order))
        for cid in want_list.cids:
            self._publish_record(state, cid)
        self.network._event(
            "fetch",
            node=self.node_id.text,
            root=root.text,
            blocks=len(want_list.cids),
        )
        return reassemble(root, state.blocks.get)

    # --- local inspection ---------------------------------------------------

    @property
    def blocks(self) -> BlockSet:
        return self._state().blocks
