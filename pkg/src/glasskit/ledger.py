"""Permissioned ledger simulation.

One hash-chained channel: org identities with root-signed member
certificates, a world state rebuilt purely from recorded write-sets, and
data collections whose values live off-ledger while only their digests
are committed on-chain. Every invocation, including reads and rejected
calls, is appended as a transaction so the full history can be audited
and replayed.

Submissions are serialized: one writer at a time per channel, enforced
with an internal lock. Concurrent readers see immutable block snapshots.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable

from .canonical import Json, canonical_parse, canonical_serialize
from .crypto import SigningKeypair, base58_decode, base58_encode, sha256, sign, verify
from .errors import (
    AccessDenied,
    AuthError,
    ChaincodeError,
    ConfigError,
    EnrollmentError,
    NotFound,
)

GENESIS_PREV_HASH = bytes(32)

ChaincodeFn = Callable[..., Any]
ChaincodeTable = dict[str, ChaincodeFn]


@dataclass(frozen=True)
class Org:
    """Channel organisation with its root signing keypair."""

    name: str
    root: SigningKeypair

    def to_dict(self) -> dict:
        return {"name": self.name, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, record: dict) -> "Org":
        return cls(record["name"], SigningKeypair.from_dict(record["root"]))


def _cert_message(org_name: str, member_public: bytes) -> bytes:
    return canonical_serialize(
        {"org": org_name, "public_b58": base58_encode(member_public)}
    )


@dataclass(frozen=True)
class MemberIdentity:
    """Enrolled member: org-rooted certificate over the member public key."""

    org: str
    keys: SigningKeypair
    cert: bytes

    def public_record(self) -> dict:
        return {
            "org": self.org,
            "public_b58": base58_encode(self.keys.public),
            "cert_b58": base58_encode(self.cert),
        }

    def to_dict(self) -> dict:
        return {"org": self.org, "keys": self.keys.to_dict(),
                "cert_b58": base58_encode(self.cert)}

    @classmethod
    def from_dict(cls, record: dict) -> "MemberIdentity":
        return cls(
            org=record["org"],
            keys=SigningKeypair.from_dict(record["keys"]),
            cert=base58_decode(record["cert_b58"]),
        )


@dataclass(frozen=True)
class CollectionConfig:
    """Org-scoped read/write policy for one data collection."""

    name: str
    readers: frozenset[str]
    writers: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "readers": sorted(self.readers),
            "writers": sorted(self.writers),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "CollectionConfig":
        return cls(record["name"], frozenset(record["readers"]),
                   frozenset(record["writers"]))


@dataclass(frozen=True)
class Receipt:
    block_height: int
    tx_index: int
    result: Any


@dataclass(frozen=True)
class Transaction:
    """One recorded invocation. The invoker signs the request part;
    commit metadata (status, write-set) is sealed by the block hash."""

    invoker: dict
    chaincode: str
    function: str
    args: tuple[bytes, ...]
    logical_time: int
    transient_digests: dict[str, str]
    signature: bytes
    status: str  # "ok" | "rejected"
    error: str
    state_writes: dict[str, Json]
    collection_digest_writes: dict[str, dict[str, str]]

    @staticmethod
    def request_dict(invoker: dict, chaincode: str, function: str,
                     args: tuple[bytes, ...], logical_time: int,
                     transient_digests: dict[str, str]) -> dict:
        return {
            "args_b58": [base58_encode(a) for a in args],
            "chaincode": chaincode,
            "function": function,
            "invoker": invoker,
            "logical_time": logical_time,
            "transient_digests_b58": transient_digests,
        }

    def to_dict(self) -> dict:
        record = self.request_dict(
            self.invoker, self.chaincode, self.function,
            self.args, self.logical_time, self.transient_digests,
        )
        record.update({
            "signature_b58": base58_encode(self.signature),
            "status": self.status,
            "error": self.error,
            "writes": {
                "state": self.state_writes,
                "collections": self.collection_digest_writes,
            },
        })
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "Transaction":
        return cls(
            invoker=record["invoker"],
            chaincode=record["chaincode"],
            function=record["function"],
            args=tuple(base58_decode(a) for a in record["args_b58"]),
            logical_time=record["logical_time"],
            transient_digests=dict(record["transient_digests_b58"]),
            signature=base58_decode(record["signature_b58"]),
            status=record["status"],
            error=record["error"],
            state_writes=dict(record["writes"]["state"]),
            collection_digest_writes={
                name: dict(entries)
                for name, entries in record["writes"]["collections"].items()
            },
        )


@dataclass(frozen=True)
class LedgerBlock:
    height: int
    prev_hash: bytes
    txs: tuple[Transaction, ...]
    block_hash: bytes

    @staticmethod
    def compute_hash(prev_hash: bytes, txs: tuple[Transaction, ...]) -> bytes:
        payload = canonical_serialize([tx.to_dict() for tx in txs])
        return sha256(prev_hash + payload)

    @classmethod
    def build(cls, height: int, prev_hash: bytes,
              txs: tuple[Transaction, ...]) -> "LedgerBlock":
        return cls(height, prev_hash, txs, cls.compute_hash(prev_hash, txs))

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "prev_hash_b58": base58_encode(self.prev_hash),
            "txs": [tx.to_dict() for tx in self.txs],
            "block_hash_b58": base58_encode(self.block_hash),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "LedgerBlock":
        return cls(
            height=record["height"],
            prev_hash=base58_decode(record["prev_hash_b58"]),
            txs=tuple(Transaction.from_dict(t) for t in record["txs"]),
            block_hash=base58_decode(record["block_hash_b58"]),
        )


class ChaincodeContext:
    """Execution context handed to chaincode functions.

    Writes are staged and applied only if the invocation succeeds; reads
    see staged writes first. Collection access enforces the org policy
    and never leaks a value on denial.
    """

    def __init__(self, channel: "Channel", org: str,
                 transient: dict[str, bytes], read_only: bool = False):
        self._channel = channel
        self.org = org
        self.transient = transient
        self._read_only = read_only
        self.staged_state: dict[str, Json] = {}
        self.staged_collections: dict[str, dict[str, bytes]] = {}

    def _check_writable(self) -> None:
        if self._read_only:
            raise ChaincodeError("invocation is read-only")

    def get_state(self, key: str) -> Json:
        if key in self.staged_state:
            return self.staged_state[key]
        return self._channel.state.get(key)

    def put_state(self, key: str, value: Json) -> None:
        self._check_writable()
        self.staged_state[key] = value

    def collection_put(self, collection: str, key: str, value: bytes) -> None:
        config = self._channel.collection_config(collection)
        if self.org not in config.writers:
            raise AccessDenied(self.org, collection)
        self._check_writable()
        self.staged_collections.setdefault(collection, {})[key] = value

    def collection_get(self, collection: str, key: str) -> bytes | None:
        config = self._channel.collection_config(collection)
        if self.org not in config.readers:
            raise AccessDenied(self.org, collection)
        staged = self.staged_collections.get(collection, {})
        if key in staged:
            return staged[key]
        return self._channel.collection_values.get(collection, {}).get(key)

    def collection_has(self, collection: str, key: str) -> bool:
        """Existence check against the on-ledger digest map: no read
        policy needed because no value is revealed."""
        self._channel.collection_config(collection)
        if key in self.staged_collections.get(collection, {}):
            return True
        return key in self._channel.collection_digests.get(collection, {})

    def state_keys(self) -> list[str]:
        keys = set(self._channel.state) | set(self.staged_state)
        return sorted(keys)


@dataclass
class Channel:
    orgs: dict[str, Org]
    collections: dict[str, CollectionConfig]
    blocks: list[LedgerBlock] = field(default_factory=list)
    state: dict[str, Json] = field(default_factory=dict)
    collection_digests: dict[str, dict[str, str]] = field(default_factory=dict)
    collection_values: dict[str, dict[str, bytes]] = field(default_factory=dict)
    chaincodes: dict[str, ChaincodeTable] = field(default_factory=dict)
    clock: int = 0

    def __post_init__(self):
        self._lock = threading.Lock()

    # --- construction -----------------------------------------------------

    @classmethod
    def create(cls, orgs: list[Org],
               collections: list[CollectionConfig]) -> "Channel":
        if not orgs:
            raise ConfigError("a channel needs at least one organisation")
        names = [o.name for o in orgs]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate organisation names")
        coll_names = [c.name for c in collections]
        if len(set(coll_names)) != len(coll_names):
            raise ConfigError("duplicate collection names")
        for config in collections:
            unknown = (config.readers | config.writers) - set(names)
            if unknown:
                raise ConfigError(
                    f"collection {config.name}: unknown orgs {sorted(unknown)}"
                )
        channel = cls(
            orgs={o.name: o for o in orgs},
            collections={c.name: c for c in collections},
        )
        channel.blocks.append(LedgerBlock.build(0, GENESIS_PREV_HASH, ()))
        return channel

    def install(self, name: str, table: ChaincodeTable) -> None:
        self.chaincodes[name] = dict(table)

    def collection_config(self, name: str) -> CollectionConfig:
        try:
            return self.collections[name]
        except KeyError:
            raise NotFound(f"unknown collection: {name}") from None

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    # --- membership -----------------------------------------------------

    def enroll(self, org_name: str, keys: SigningKeypair) -> MemberIdentity:
        org = self.orgs.get(org_name)
        if org is None:
            raise EnrollmentError(f"unknown organisation: {org_name}")
        cert = sign(org.root, _cert_message(org_name, keys.public))
        return MemberIdentity(org=org_name, keys=keys, cert=cert)

    def _verify_identity(self, identity: MemberIdentity) -> None:
        org = self.orgs.get(identity.org)
        if org is None:
            raise AuthError(f"unknown organisation: {identity.org}")
        message = _cert_message(identity.org, identity.keys.public)
        if not verify(org.root.public, message, identity.cert):
            raise AuthError("member certificate does not verify under org root")

    # --- invocation -----------------------------------------------------

    def _resolve_function(self, chaincode: str, function: str) -> ChaincodeFn:
        table = self.chaincodes.get(chaincode)
        if table is None:
            raise NotFound(f"chaincode not installed: {chaincode}")
        fn = table.get(function)
        if fn is None:
            raise NotFound(f"unknown function: {chaincode}.{function}")
        return fn

    def submit(self, identity: MemberIdentity, chaincode: str, function: str,
               args: list[bytes], transient: dict[str, bytes] | None = None) -> Receipt:
        """Execute and record one invocation in a new block.

        Rejected invocations are still appended, flagged, then their
        error is re-raised. Private (transient) inputs are never written
        to the chain; only their digests are.
        """
        transient = transient or {}
        with self._lock:
            self._verify_identity(identity)
            logical_time = self.clock
            self.clock += 1
            digests = {
                name: base58_encode(sha256(value))
                for name, value in sorted(transient.items())
            }
            invoker = identity.public_record()
            request = Transaction.request_dict(
                invoker, chaincode, function, tuple(args), logical_time, digests
            )
            signature = sign(identity.keys, canonical_serialize(request))

            ctx = ChaincodeContext(self, identity.org, transient)
            error_obj: ChaincodeError | None = None
            result = None
            try:
                fn = self._resolve_function(chaincode, function)
                result = fn(ctx, *args)
                status, error_text = "ok", ""
            except ChaincodeError as exc:
                error_obj = exc
                status, error_text = "rejected", f"{exc.code}: {exc}"
                ctx.staged_state = {}
                ctx.staged_collections = {}

            digest_writes = {
                coll: {
                    key: base58_encode(sha256(value))
                    for key, value in sorted(entries.items())
                }
                for coll, entries in sorted(ctx.staged_collections.items())
            }
            tx = Transaction(
                invoker=invoker,
                chaincode=chaincode,
                function=function,
                args=tuple(args),
                logical_time=logical_time,
                transient_digests=digests,
                signature=signature,
                status=status,
                error=error_text,
                state_writes=dict(ctx.staged_state),
                collection_digest_writes=digest_writes,
            )
            prev = self.blocks[-1]
            block = LedgerBlock.build(prev.height + 1, prev.block_hash, (tx,))
            self.blocks.append(block)

            if error_obj is not None:
                raise error_obj

            self._apply_writes(tx)
            for coll, entries in ctx.staged_collections.items():
                store = self.collection_values.setdefault(coll, {})
                store.update(entries)
            return Receipt(block.height, 0, result)

    def evaluate(self, identity: MemberIdentity, chaincode: str, function: str,
                 args: list[bytes]) -> Any:
        """Run a read-only query without recording a transaction.

        Policies and identity checks still apply; any attempted write
        fails the call.
        """
        with self._lock:
            self._verify_identity(identity)
            fn = self._resolve_function(chaincode, function)
            ctx = ChaincodeContext(self, identity.org, {}, read_only=True)
            return fn(ctx, *args)

    def _apply_writes(self, tx: Transaction) -> None:
        for key in sorted(tx.state_writes):
            self.state[key] = tx.state_writes[key]
        for coll in sorted(tx.collection_digest_writes):
            digests = self.collection_digests.setdefault(coll, {})
            digests.update(tx.collection_digest_writes[coll])

    # --- verification and replay ---------------------------------------------

    def verify_chain_report(self) -> tuple[bool, int | None, str]:
        """Full integrity check; returns (ok, first bad height, reason)."""
        if not self.blocks:
            return False, None, "empty chain"
        expected_prev = GENESIS_PREV_HASH
        last_time = -1
        replayed_digests: dict[str, dict[str, str]] = {}
        for i, block in enumerate(self.blocks):
            if block.height != i:
                return False, i, f"height {block.height} out of sequence"
            if block.prev_hash != expected_prev:
                return False, i, "previous-hash linkage broken"
            if LedgerBlock.compute_hash(block.prev_hash, block.txs) != block.block_hash:
                return False, i, "block hash mismatch"
            for tx in block.txs:
                org = self.orgs.get(tx.invoker.get("org", ""))
                if org is None:
                    return False, i, "transaction from unknown organisation"
                public = base58_decode(tx.invoker["public_b58"])
                cert = base58_decode(tx.invoker["cert_b58"])
                if not verify(org.root.public,
                              _cert_message(tx.invoker["org"], public), cert):
                    return False, i, "invoker certificate invalid"
                request = Transaction.request_dict(
                    tx.invoker, tx.chaincode, tx.function, tx.args,
                    tx.logical_time, tx.transient_digests,
                )
                if not verify(public, canonical_serialize(request), tx.signature):
                    return False, i, "transaction signature invalid"
                if tx.logical_time <= last_time:
                    return False, i, "logical time not strictly increasing"
                last_time = tx.logical_time
                if tx.status == "ok":
                    for coll, entries in tx.collection_digest_writes.items():
                        replayed_digests.setdefault(coll, {}).update(entries)
            expected_prev = block.block_hash

        # hash binding: off-ledger values against on-chain digests
        for coll, entries in replayed_digests.items():
            values = self.collection_values.get(coll, {})
            for key, digest in entries.items():
                if key not in values:
                    return False, None, f"collection {coll}/{key}: value missing"
                if base58_encode(sha256(values[key])) != digest:
                    return False, None, f"collection {coll}/{key}: hash binding broken"
        for coll, values in self.collection_values.items():
            for key in values:
                if key not in replayed_digests.get(coll, {}):
                    return False, None, f"collection {coll}/{key}: value not on ledger"
        return True, None, ""

    def verify_chain(self) -> bool:
        ok, _, _ = self.verify_chain_report()
        return ok

    def audit_rows(self) -> list[dict]:
        """One row per transaction: height, org, chaincode, function, status."""
        rows = []
        for block in self.blocks:
            for tx in block.txs:
                rows.append({
                    "height": block.height,
                    "org": tx.invoker["org"],
                    "chaincode": tx.chaincode,
                    "function": tx.function,
                    "status": tx.status,
                })
        return rows

    def export_jsonl(self) -> bytes:
        return b"\n".join(
            canonical_serialize(block.to_dict()) for block in self.blocks
        ) + b"\n"

    @classmethod
    def replay(cls, orgs: list[Org], collections: list[CollectionConfig],
               jsonl: bytes,
               collection_values: dict[str, dict[str, bytes]] | None = None) -> "Channel":
        """Reconstruct a channel purely from its exported block log.

        World state and on-ledger digests come from recorded write-sets
        of committed transactions; off-ledger values, when supplied, are
        re-attached for hash-binding verification.
        """
        channel = cls(
            orgs={o.name: o for o in orgs},
            collections={c.name: c for c in collections},
        )
        for line in jsonl.splitlines():
            if not line.strip():
                continue
            block = LedgerBlock.from_dict(canonical_parse(line))
            channel.blocks.append(block)
            for tx in block.txs:
                channel.clock = max(channel.clock, tx.logical_time + 1)
                if tx.status == "ok":
                    channel._apply_writes(tx)
        if not channel.blocks:
            raise ConfigError("ledger log contains no blocks")
        if collection_values is not None:
            channel.collection_values = {
                coll: dict(entries) for coll, entries in collection_values.items()
            }
        return channel

    def state_dump(self) -> bytes:
        """Canonical snapshot of world state and on-ledger digests,
        used to compare a live channel against a replay."""
        return canonical_serialize({
            "state": self.state,
            "collection_digests": self.collection_digests,
        })
