"""Content identifiers and chunked DAG file representation.

A content id is the sha2-256 multihash (0x12 0x20 prefix) of a block,
rendered base58btc, so every id is the same length and starts with "Qm".
Data larger than the chunk size becomes a tree: raw leaves plus interior
nodes that list child ids and byte counts. Interior nodes are encoded as
canonical JSON so the tree is deterministic and debuggable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .canonical import canonical_parse, canonical_serialize
from .crypto import base58_decode, base58_encode, sha256
from .errors import BlockCorrupt, BlockNotFound, CidFormatError

MULTIHASH_PREFIX = b"\x12\x20"  # sha2-256, 32-byte digest
DEFAULT_CHUNK_SIZE = 262_144
FAN_OUT = 174  # max links per interior node


@dataclass(frozen=True)
class ContentId:
    """Fixed-length identifier of one block, independent of block size."""

    multihash: bytes

    def __post_init__(self):
        if len(self.multihash) != 34 or self.multihash[:2] != MULTIHASH_PREFIX:
            raise CidFormatError("multihash must be 0x12 0x20 plus a 32-byte digest")

    @property
    def digest(self) -> bytes:
        return self.multihash[2:]

    @property
    def text(self) -> str:
        return base58_encode(self.multihash)

    @classmethod
    def parse(cls, text: str) -> "ContentId":
        try:
            raw = base58_decode(text)
        except Exception as exc:
            raise CidFormatError(f"not base58: {text!r}") from exc
        return cls(raw)

    def __lt__(self, other: "ContentId") -> bool:
        return self.multihash < other.multihash

    def __repr__(self) -> str:
        return f"ContentId({self.text})"


BlockSet = dict[ContentId, bytes]


def cid_of_block(data: bytes) -> ContentId:
    """Content id over exactly the given bytes."""
    return ContentId(MULTIHASH_PREFIX + sha256(data))


# --- interior node encoding ---------------------------------------------------

def _encode_interior(links: list[ContentId], sizes: list[int]) -> bytes:
    return canonical_serialize({
        "kind": "interior",
        "links": [link.text for link in links],
        "sizes": sizes,
    })


def decode_interior(data: bytes) -> tuple[list[ContentId], list[int]] | None:
    """Parse interior-node bytes; None when the block is a raw leaf.

    The match is strict: the bytes must re-serialize identically, links
    must parse and there must be at least two of them, which keeps raw
    leaves from ever masquerading as interior nodes.
    """
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    if not isinstance(obj, dict) or obj.get("kind") != "interior":
        return None
    if set(obj) != {"kind", "links", "sizes"}:
        return None
    links, sizes = obj["links"], obj["sizes"]
    if not isinstance(links, list) or not isinstance(sizes, list):
        return None
    if len(links) < 2 or len(links) != len(sizes):
        return None
    if not all(isinstance(s, int) and s >= 0 for s in sizes):
        return None
    try:
        parsed = [ContentId.parse(t) for t in links]
    except (CidFormatError, TypeError):
        return None
    if _encode_interior(parsed, sizes) != data:
        return None
    return parsed, sizes


# --- building and reading DAGs -------------------------------------------------

def _even_groups(n: int, limit: int) -> list[int]:
    """Split n items into the fewest groups of at most ``limit``, sizes
    differing by at most one (so no group ever has a single link)."""
    count = -(-n // limit)
    base, extra = divmod(n, count)
    return [base + 1] * extra + [base] * (count - extra)


def build_dag(data: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE) -> tuple[ContentId, BlockSet]:
    """Split ``data`` into verifiable blocks; returns (root id, all blocks).

    Data that fits one chunk is a single raw leaf and the root is simply
    its content id. Larger data gets one leaf per chunk plus interior
    nodes, balanced so no node exceeds the fan-out limit.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    blocks: BlockSet = {}

    if len(data) <= chunk_size:
        root = cid_of_block(data)
        blocks[root] = data
        return root, blocks

    level: list[tuple[ContentId, int]] = []
    for start in range(0, len(data), chunk_size):
        chunk = data[start:start + chunk_size]
        cid = cid_of_block(chunk)
        blocks[cid] = chunk
        level.append((cid, len(chunk)))

    while len(level) > 1:
        next_level: list[tuple[ContentId, int]] = []
        index = 0
        # even grouping keeps every interior node between 2 and FAN_OUT links
        for group in _even_groups(len(level), FAN_OUT):
            children = level[index:index + group]
            index += group
            links = [c for c, _ in children]
            sizes = [s for _, s in children]
            encoded = _encode_interior(links, sizes)
            cid = cid_of_block(encoded)
            blocks[cid] = encoded
            next_level.append((cid, sum(sizes)))
        level = next_level

    return level[0][0], blocks


def reassemble(root: ContentId, lookup: Callable[[ContentId], bytes | None]) -> bytes:
    """Rebuild the original bytes from ``root``, verifying every block.

    ``lookup`` returns block bytes or None. A missing block raises
    :class:`BlockNotFound`; bytes that do not hash to the requested id
    raise :class:`BlockCorrupt` and are never incorporated.
    """
    def fetch(cid: ContentId) -> bytes:
        data = lookup(cid)
        if data is None:
            raise BlockNotFound(cid.text)
        if cid_of_block(data) != cid:
            raise BlockCorrupt(cid.text)
        return data

    out = bytearray()
    stack = [root]
    while stack:
        cid = stack.pop()
        data = fetch(cid)
        interior = decode_interior(data)
        if interior is None:
            out.extend(data)
        else:
            links, _ = interior
            stack.extend(reversed(links))
    return bytes(out)


def dag_cids(root: ContentId, lookup: Callable[[ContentId], bytes | None]) -> list[ContentId]:
    """All block ids reachable from ``root`` in want-list (preorder) order."""
    seen: list[ContentId] = []
    stack = [root]
    while stack:
        cid = stack.pop()
        seen.append(cid)
        data = lookup(cid)
        if data is None:
            raise BlockNotFound(cid.text)
        interior = decode_interior(data)
        if interior is not None:
            stack.extend(reversed(interior[0]))
    return seen


# --- block set export/import ----------------------------------------------------

def export_blocks(directory: str | Path, root: ContentId, blocks: BlockSet) -> Path:
    """Write each block to ``directory`` named by its cid text, plus a
    manifest listing the root and every block id. Returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for cid, data in sorted(blocks.items()):
        (directory / cid.text).write_bytes(data)
    manifest = {
        "root": root.text,
        "blocks": sorted(cid.text for cid in blocks),
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_bytes(canonical_serialize(manifest))
    return manifest_path


def import_blocks(directory: str | Path) -> tuple[ContentId, BlockSet]:
    """Read a directory written by :func:`export_blocks`, verifying hashes."""
    directory = Path(directory)
    manifest = canonical_parse((directory / "manifest.json").read_bytes())
    blocks: BlockSet = {}
    for text in manifest["blocks"]:
        cid = ContentId.parse(text)
        data = (directory / text).read_bytes()
        if cid_of_block(data) != cid:
            raise BlockCorrupt(text)
        blocks[cid] = data
    return ContentId.parse(manifest["root"]), blocks
