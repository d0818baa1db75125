from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from glasskit.crypto import (
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
from glasskit.errors import AuthenticationFailure, Base58Error

# FIPS 180-4 test vectors, confirmed against sha256sum
SHA256_VECTORS = [
    (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
    (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
    (b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
     "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"),
]

# RFC 8032 section 7.1, vectors 1-3
ED25519_VECTORS = [
    ("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
     "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a",
     "",
     "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
     "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"),
    ("4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
     "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c",
     "72",
     "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
     "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00"),
    ("c5aa8df43f9f837bedb7442f31dcb7b166d38535076f094b85ce3a2e0b4458f7",
     "fc51cd8e6218a1a38da47ed00230f0580816ed13ba3303ac5deb911548908025",
     "af82",
     "6291d657deec24024827e69c3abe01a30ce548a284743a445e3680d7db5ac3ac"
     "18ff9b538d16f290ae67f760984dc6594a7c15e9716ed28dc027beceea1ec40a"),
]

# NIST GCM known-answer vectors, 256-bit keys (cases 13-15)
GCM_VECTORS = [
    ("00" * 32, "00" * 12, "", "530f8afbc74536b9a963b4f1c4cb738b"),
    ("00" * 32, "00" * 12, "00" * 16,
     "cea7403d4d606b6e074ec5d3baf39d18d0d1c8a799996bf0265b98b5d48ab919"),
    ("feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308",
     "cafebabefacedbaddecaf888",
     "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
     "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255",
     "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
     "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662898015ad"
     "b094dac5d93471bdec1a502270e3cc6c"),
]


class TestSha256:
    @pytest.mark.parametrize("message,expected", SHA256_VECTORS)
    def test_fips_vectors(self, message, expected):
        assert sha256(message).hex() == expected

    def test_deterministic(self):
        assert sha256(b"same input") == sha256(b"same input")

    def test_digest_is_32_bytes(self):
        assert len(sha256(b"x" * 100_000)) == 32


class TestBase58:
    def test_empty(self):
        assert base58_encode(b"") == ""
        assert base58_decode("") == b""

    def test_leading_zeros(self):
        # hand computed from base58btc rules; checked against an
        # independent encoder
        assert base58_encode(bytes([0, 0, 1])) == "112"
        assert base58_decode("112") == bytes([0, 0, 1])

    def test_invalid_character(self):
        with pytest.raises(Base58Error):
            base58_decode("0OIl")  # none of these are in the alphabet

    def test_roundtrip_1000_random(self):
        rng = random.Random(42)
        for _ in range(1000):
            data = rng.randbytes(rng.randint(0, 64))
            assert base58_decode(base58_encode(data)) == data

    @given(st.binary(max_size=256))
    def test_roundtrip_property(self, data):
        assert base58_decode(base58_encode(data)) == data


class TestSigning:
    @pytest.mark.parametrize("secret,public,message,signature", ED25519_VECTORS)
    def test_rfc8032_vectors(self, secret, public, message, signature):
        keys = SigningKeypair.from_secret(bytes.fromhex(secret))
        assert keys.public == bytes.fromhex(public)
        produced = sign(keys, bytes.fromhex(message))
        assert produced == bytes.fromhex(signature)
        assert verify(keys.public, bytes.fromhex(message), produced)

    def test_tampered_message_rejected(self):
        keys = SigningKeypair.generate(random.Random(1))
        message = bytearray(b"a statement to sign")
        signature = sign(keys, bytes(message))
        for i in range(len(message)):
            flipped = bytearray(message)
            flipped[i] ^= 0x01
            assert not verify(keys.public, bytes(flipped), signature)

    def test_wrong_public_key_rejected(self):
        rng = random.Random(2)
        keys, other = SigningKeypair.generate(rng), SigningKeypair.generate(rng)
        signature = sign(keys, b"message")
        assert not verify(other.public, b"message", signature)

    def test_verify_returns_false_never_raises(self):
        keys = SigningKeypair.generate(random.Random(3))
        assert verify(keys.public, b"m", b"\x00" * 64) is False
        assert verify(b"\x00" * 32, b"m", b"\x00" * 64) is False

    def test_keypair_serialization_roundtrip(self):
        keys = SigningKeypair.generate(random.Random(4))
        record = keys.to_dict()
        assert record["kind"] == "signing"
        assert SigningKeypair.from_dict(record) == keys


class TestContentEncryption:
    @pytest.mark.parametrize("key,iv,plaintext,expected", GCM_VECTORS)
    def test_nist_gcm_vectors(self, key, iv, plaintext, expected):
        ck = ContentKey(key=bytes.fromhex(key), nonce=bytes.fromhex(iv))
        out = encrypt_content(bytes.fromhex(plaintext), ck)
        assert out.hex() == expected

    def test_roundtrip_up_to_1mib(self):
        rng = random.Random(5)
        for size in (0, 1, 1024, 65_537, 1 << 20):
            ck = ContentKey.generate(rng)
            plaintext = rng.randbytes(size)
            assert decrypt_content(encrypt_content(plaintext, ck), ck) == plaintext

    def test_single_bit_flip_fails_authentication(self):
        rng = random.Random(6)
        ck = ContentKey.generate(rng)
        sealed = bytearray(encrypt_content(b"confidential credential", ck))
        for i in range(0, len(sealed), 7):
            flipped = bytearray(sealed)
            flipped[i] ^= 0x80
            with pytest.raises(AuthenticationFailure):
                decrypt_content(bytes(flipped), ck)

    def test_wrong_key_fails_authentication(self):
        rng = random.Random(7)
        ck, other = ContentKey.generate(rng), ContentKey.generate(rng)
        sealed = encrypt_content(b"payload", ck)
        with pytest.raises(AuthenticationFailure):
            decrypt_content(sealed, other)

    def test_short_input_is_format_error_not_auth_failure(self):
        ck = ContentKey.generate(random.Random(8))
        with pytest.raises(ValueError) as excinfo:
            decrypt_content(b"short", ck)
        assert not isinstance(excinfo.value, AuthenticationFailure)

    def test_key_shape_enforced(self):
        with pytest.raises(ValueError):
            ContentKey(key=b"\x00" * 31, nonce=b"\x00" * 12)
        with pytest.raises(ValueError):
            ContentKey(key=b"\x00" * 32, nonce=b"\x00" * 11)


class TestKeyWrapping:
    def test_wrap_unwrap_roundtrip(self):
        rng = random.Random(9)
        recipient = AgreementKeypair.generate(rng)
        ck = ContentKey.generate(rng)
        wrapped = wrap_key(ck, recipient.public, rng)
        assert unwrap_key(wrapped, recipient.secret) == ck

    def test_unwrap_with_any_other_secret_fails(self):
        rng = random.Random(10)
        recipient = AgreementKeypair.generate(rng)
        ck = ContentKey.generate(rng)
        wrapped = wrap_key(ck, recipient.public, rng)
        for _ in range(20):
            other = AgreementKeypair.generate(rng)
            with pytest.raises(AuthenticationFailure):
                unwrap_key(wrapped, other.secret)

    def test_ephemeral_freshness_100_trials(self):
        # wrapping the same key to the same recipient must never repeat
        rng = random.Random(11)
        recipient = AgreementKeypair.generate(rng)
        ck = ContentKey.generate(rng)
        seen = {wrap_key(ck, recipient.public, rng).ephemeral_public
                for _ in range(100)}
        assert len(seen) == 100

    def test_recipient_hint(self):
        rng = random.Random(12)
        recipient = AgreementKeypair.generate(rng)
        wrapped = wrap_key(ContentKey.generate(rng), recipient.public, rng)
        assert wrapped.recipient_hint == sha256(recipient.public)
        assert len(wrapped.tag) == 16

    def test_wrapped_key_serialization_roundtrip(self):
        rng = random.Random(13)
        recipient = AgreementKeypair.generate(rng)
        ck = ContentKey.generate(rng)
        wrapped = wrap_key(ck, recipient.public, rng)
        restored = WrappedKey.from_dict(wrapped.to_dict())
        assert restored == wrapped
        assert unwrap_key(restored, recipient.secret) == ck

    def test_dh_shared_secret_symmetry(self):
        rng = random.Random(14)
        a, b = AgreementKeypair.generate(rng), AgreementKeypair.generate(rng)
        from cryptography.hazmat.primitives.asymmetric import x25519

        left = x25519.X25519PrivateKey.from_private_bytes(a.secret).exchange(
            x25519.X25519PublicKey.from_public_bytes(b.public))
        right = x25519.X25519PrivateKey.from_private_bytes(b.secret).exchange(
            x25519.X25519PublicKey.from_public_bytes(a.public))
        assert left == right


class TestSeededDeterminism:
    def test_seeded_outputs_reproduce(self):
        def everything(seed: int):
            rng = random.Random(seed)
            signing = SigningKeypair.generate(rng)
            agreement = AgreementKeypair.generate(rng)
            ck = ContentKey.generate(rng)
            wrapped = wrap_key(ck, agreement.public, rng)
            return (signing, agreement, ck, wrapped,
                    encrypt_content(b"payload", ck))

        assert everything(99) == everything(99)
        assert everything(99) != everything(100)
