"""Deterministic cryptographic primitives used across the package.

Algorithms are fixed: SHA-256 hashing, base58btc text encoding, Ed25519
signatures, AES-256-GCM content encryption, and Curve25519 + HKDF-SHA256
key wrapping. Every random choice can be driven from a caller-supplied
seeded generator so whole scenarios replay byte-identically; without one,
randomness comes from the operating system.

No operation ever returns partial plaintext on authentication failure.
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ed25519, x25519
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import AuthenticationFailure, Base58Error

Rng = random.Random

_WRAP_INFO = b"glasskit/key-wrap/v1"
# One wrap per ephemeral key, so a fixed nonce is safe for the wrapping AEAD.
_WRAP_NONCE = bytes(12)


def random_bytes(n: int, rng: Rng | None = None) -> bytes:
    """``n`` random bytes, from ``rng`` when given (reproducible test mode)."""
    return rng.randbytes(n) if rng is not None else os.urandom(n)


def sha256(data: bytes) -> bytes:
    """Standard 32-byte SHA-256 digest."""
    return hashlib.sha256(data).digest()


# --- base58btc ---------------------------------------------------------------

_B58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_B58_INDEX = {c: i for i, c in enumerate(_B58_ALPHABET)}


def base58_encode(data: bytes) -> str:
    """Encode bytes as base58btc; leading zero bytes become leading '1's."""
    pad = 0
    for byte in data:
        if byte:
            break
        pad += 1
    n = int.from_bytes(data, "big")
    chars = []
    while n:
        n, rem = divmod(n, 58)
        chars.append(_B58_ALPHABET[rem])
    return "1" * pad + "".join(reversed(chars))


def base58_decode(text: str) -> bytes:
    """Inverse of :func:`base58_encode`; raises on non-alphabet characters."""
    pad = 0
    for ch in text:
        if ch != "1":
            break
        pad += 1
    n = 0
    for ch in text:
        try:
            n = n * 58 + _B58_INDEX[ch]
        except KeyError:
            raise Base58Error(f"invalid base58 character {ch!r}") from None
    body = n.to_bytes((n.bit_length() + 7) // 8, "big") if n else b""
    return b"\x00" * pad + body


# --- signing (Ed25519) -------------------------------------------------------

@dataclass(frozen=True)
class SigningKeypair:
    """Ed25519 keypair; the public key is derived from the 32-byte seed."""

    secret: bytes
    public: bytes

    purpose = "signing"

    @classmethod
    def from_secret(cls, secret: bytes) -> "SigningKeypair":
        priv = ed25519.Ed25519PrivateKey.from_private_bytes(secret)
        return cls(secret=secret, public=priv.public_key().public_bytes_raw())

    @classmethod
    def generate(cls, rng: Rng | None = None) -> "SigningKeypair":
        return cls.from_secret(random_bytes(32, rng))

    def to_dict(self) -> dict:
        return {
            "kind": self.purpose,
            "public_b58": base58_encode(self.public),
            "secret_b58": base58_encode(self.secret),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "SigningKeypair":
        return cls.from_secret(base58_decode(record["secret_b58"]))


def sign(keypair: SigningKeypair, message: bytes) -> bytes:
    """Detached 64-byte Ed25519 signature over ``message``."""
    priv = ed25519.Ed25519PrivateKey.from_private_bytes(keypair.secret)
    return priv.sign(message)


def verify(public: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is valid for ``message`` under ``public``.

    Bad signatures return False; they never raise.
    """
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


# --- key agreement (Curve25519) ----------------------------------------------

@dataclass(frozen=True)
class AgreementKeypair:
    """X25519 keypair used only to wrap content keys to a recipient."""

    secret: bytes
    public: bytes

    purpose = "agreement"

    @classmethod
    def from_secret(cls, secret: bytes) -> "AgreementKeypair":
        priv = x25519.X25519PrivateKey.from_private_bytes(secret)
        return cls(secret=secret, public=priv.public_key().public_bytes_raw())

    @classmethod
    def generate(cls, rng: Rng | None = None) -> "AgreementKeypair":
        return cls.from_secret(random_bytes(32, rng))

    def to_dict(self) -> dict:
        return {
            "kind": self.purpose,
            "public_b58": base58_encode(self.public),
            "secret_b58": base58_encode(self.secret),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "AgreementKeypair":
        return cls.from_secret(base58_decode(record["secret_b58"]))


# --- content encryption (AES-256-GCM) ----------------------------------------

@dataclass(frozen=True)
class ContentKey:
    """256-bit content key plus the 96-bit nonce it is used with, exactly once."""

    key: bytes
    nonce: bytes

    def __post_init__(self):
        if len(self.key) != 32:
            raise ValueError("content key must be 32 bytes")
        if len(self.nonce) != 12:
            raise ValueError("content nonce must be 12 bytes")

    @classmethod
    def generate(cls, rng: Rng | None = None) -> "ContentKey":
        return cls(key=random_bytes(32, rng), nonce=random_bytes(12, rng))


def encrypt_content(plaintext: bytes, ck: ContentKey) -> bytes:
    """AES-256-GCM; returns ciphertext with the 16-byte tag appended."""
    return AESGCM(ck.key).encrypt(ck.nonce, plaintext, None)


def decrypt_content(data: bytes, ck: ContentKey) -> bytes:
    """Inverse of :func:`encrypt_content`.

    Raises :class:`AuthenticationFailure` if the ciphertext was modified
    or the key is wrong; format problems raise ValueError.
    """
    if len(data) < 16:
        raise ValueError("ciphertext shorter than the authentication tag")
    try:
        return AESGCM(ck.key).decrypt(ck.nonce, data, None)
    except InvalidTag:
        raise AuthenticationFailure("content authentication failed") from None


# --- key wrapping (ECIES-style) ----------------------------------------------

@dataclass(frozen=True)
class WrappedKey:
    """A content key encrypted to a recipient's agreement public key.

    Fresh ephemeral X25519 keypair per wrap, HKDF-SHA256 to derive the
    wrapping key, AES-256-GCM over key-then-nonce. Only the matching
    agreement secret can unwrap; anything else fails authentication.
    """

    ephemeral_public: bytes
    ciphertext: bytes
    tag: bytes
    recipient_hint: bytes  # sha256 of the recipient public key

    def to_dict(self) -> dict:
        return {
            "ephemeral_public_b58": base58_encode(self.ephemeral_public),
            "ciphertext_b58": base58_encode(self.ciphertext),
            "tag_b58": base58_encode(self.tag),
            "recipient_hint_b58": base58_encode(self.recipient_hint),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "WrappedKey":
        return cls(
            ephemeral_public=base58_decode(record["ephemeral_public_b58"]),
            ciphertext=base58_decode(record["ciphertext_b58"]),
            tag=base58_decode(record["tag_b58"]),
            recipient_hint=base58_decode(record["recipient_hint_b58"]),
        )


def _wrapping_key(dh_secret: bytes, dh_peer_public: bytes,
                  ephemeral_public: bytes, recipient_public: bytes) -> bytes:
    shared = x25519.X25519PrivateKey.from_private_bytes(dh_secret).exchange(
        x25519.X25519PublicKey.from_public_bytes(dh_peer_public)
    )
    return HKDF(
        algorithm=hashes.SHA256(),
        length=32,
        salt=None,
        info=_WRAP_INFO + ephemeral_public + recipient_public,
    ).derive(shared)


def wrap_key(ck: ContentKey, recipient_public: bytes,
             rng: Rng | None = None) -> WrappedKey:
    """Wrap ``ck`` so only the holder of the recipient secret can recover it."""
    ephemeral = AgreementKeypair.generate(rng)
    kek = _wrapping_key(ephemeral.secret, recipient_public,
                        ephemeral.public, recipient_public)
    sealed = AESGCM(kek).encrypt(_WRAP_NONCE, ck.key + ck.nonce, None)
    return WrappedKey(
        ephemeral_public=ephemeral.public,
        ciphertext=sealed[:-16],
        tag=sealed[-16:],
        recipient_hint=sha256(recipient_public),
    )


def unwrap_key(wrapped: WrappedKey, recipient_secret: bytes) -> ContentKey:
    """Recover the content key; wrong secrets fail authentication."""
    recipient = AgreementKeypair.from_secret(recipient_secret)
    kek = _wrapping_key(recipient_secret, wrapped.ephemeral_public,
                        wrapped.ephemeral_public, recipient.public)
    try:
        opened = AESGCM(kek).decrypt(
            _WRAP_NONCE, wrapped.ciphertext + wrapped.tag, None
        )
    except InvalidTag:
        raise AuthenticationFailure("key unwrap failed: not the addressee") from None
    if len(opened) != 44:
        raise AuthenticationFailure("key unwrap produced malformed key material")
    return ContentKey(key=opened[:32], nonce=opened[32:])
