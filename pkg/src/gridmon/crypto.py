"""Lightweight cryptography for the monitoring protocol.

Three primitives, all small enough to run on constrained field hardware:

* prime-field elliptic curve arithmetic with ECDH key agreement,
* the RC5-32/12/16 block cipher, used here in counter mode,
* HMAC plus a nested variant that binds a group key over a pairwise key.

A hybrid construction (ephemeral ECDH + RC5-CTR + HMAC) seals aggregate
payloads for the control-center public key.

Points are affine ``(x, y)`` tuples; ``None`` is the point at infinity.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
import random
from dataclasses import dataclass

Point = "tuple[int, int] | None"


class CryptoError(ValueError):
    """Raised for malformed keys, points, or sealed payloads."""


# ===== elliptic curve arithmetic =====


@dataclass(frozen=True)
class CurveParams:
    """Short Weierstrass curve y^2 = x^3 + a*x + b over GF(p), base point order n."""

    name: str
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int

    @property
    def g(self) -> tuple[int, int]:
        return (self.gx, self.gy)

    @property
    def byte_length(self) -> int:
        return (self.p.bit_length() + 7) // 8


# A 19-point toy curve small enough for exhaustive group checks, and a
# production-sized 256-bit curve for actual scenario runs.
CURVES: dict[str, CurveParams] = {
    "toy17": CurveParams("toy17", p=17, a=2, b=2, gx=5, gy=1, n=19),
    "secp256k1": CurveParams(
        "secp256k1",
        p=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F,
        a=0,
        b=7,
        gx=0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
        gy=0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
        n=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141,
    ),
}


def is_on_curve(curve: CurveParams, point) -> bool:
    """True for curve points and for the point at infinity."""
    if point is None:
        return True
    x, y = point
    return (y * y - (x * x * x + curve.a * x + curve.b)) % curve.p == 0


def point_add(curve: CurveParams, p1, p2):
    """Chord-and-tangent addition. Inputs must lie on the curve."""
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and (y1 + y2) % curve.p == 0:
        return None
    if p1 == p2:
        if y1 == 0:
            return None
        m = (3 * x1 * x1 + curve.a) * pow(2 * y1, -1, curve.p) % curve.p
    else:
        m = (y2 - y1) * pow(x2 - x1, -1, curve.p) % curve.p
    x3 = (m * m - x1 - x2) % curve.p
    y3 = (m * (x1 - x3) - y1) % curve.p
    return (x3, y3)


def scalar_mult(curve: CurveParams, k: int, point):
    """Double-and-add k*P. Negative scalars are rejected."""
    if k < 0:
        raise CryptoError("scalar must be non-negative")
    result = None
    addend = point
    while k:
        if k & 1:
            result = point_add(curve, result, addend)
        addend = point_add(curve, addend, addend)
        k >>= 1
    return result


@dataclass(frozen=True)
class KeyPair:
    curve: CurveParams
    private: int
    public: tuple[int, int]


def keypair_from_private(curve: CurveParams, private: int) -> KeyPair:
    """Build a key pair from an explicit scalar in [1, n-1]."""
    if not 1 <= private <= curve.n - 1:
        raise CryptoError(f"private key {private} out of range [1, {curve.n - 1}]")
    public = scalar_mult(curve, private, curve.g)
    return KeyPair(curve, private, public)


def keypair_generate(curve: CurveParams, rng: random.Random) -> KeyPair:
    return keypair_from_private(curve, rng.randrange(1, curve.n))


def derive_key(curve: CurveParams, point: tuple[int, int]) -> bytes:
    """16-byte symmetric key from a shared point: SHA-256 of the x coordinate."""
    x_bytes = point[0].to_bytes(curve.byte_length, "big")
    return hashlib.sha256(x_bytes).digest()[:16]


def ecdh_shared(curve: CurveParams, private: int, peer_public) -> bytes:
    """Derive the pairwise key private * peer_public -> 16 bytes."""
    if not is_on_curve(curve, peer_public) or peer_public is None:
        raise CryptoError(f"peer public key {peer_public} is not on curve {curve.name}")
    if not 1 <= private <= curve.n - 1:
        raise CryptoError("private key out of range")
    shared = scalar_mult(curve, private, peer_public)
    if shared is None:
        raise CryptoError("shared secret is the point at infinity")
    return derive_key(curve, shared)


# ===== RC5-32/12/16 =====

_M32 = 0xFFFFFFFF
_P32 = 0xB7E15163
_Q32 = 0x9E3779B9
RC5_ROUNDS = 12
RC5_KEY_BYTES = 16
RC5_BLOCK_BYTES = 8


def _rotl(x: int, s: int) -> int:
    s &= 31
    return ((x << s) | (x >> (32 - s))) & _M32


def _rotr(x: int, s: int) -> int:
    s &= 31
    return ((x >> s) | (x << (32 - s))) & _M32


def rc5_key_schedule(key: bytes) -> list[int]:
    """Expand a 16-byte key into the 26-word round key table."""
    if len(key) != RC5_KEY_BYTES:
        raise CryptoError(f"RC5 key must be {RC5_KEY_BYTES} bytes, got {len(key)}")
    t = 2 * (RC5_ROUNDS + 1)
    c = RC5_KEY_BYTES // 4
    L = [int.from_bytes(key[4 * i : 4 * i + 4], "little") for i in range(c)]
    S = [0] * t
    S[0] = _P32
    for i in range(1, t):
        S[i] = (S[i - 1] + _Q32) & _M32
    A = B = i = j = 0
    for _ in range(3 * max(t, c)):
        A = S[i] = _rotl((S[i] + A + B) & _M32, 3)
        B = L[j] = _rotl((L[j] + A + B) & _M32, A + B)
        i = (i + 1) % t
        j = (j + 1) % c
    return S


def rc5_encrypt_block(S: list[int], block: bytes) -> bytes:
    if len(block) != RC5_BLOCK_BYTES:
        raise CryptoError("RC5 block must be 8 bytes")
    A = (int.from_bytes(block[0:4], "little") + S[0]) & _M32
    B = (int.from_bytes(block[4:8], "little") + S[1]) & _M32
    for i in range(1, RC5_ROUNDS + 1):
        A = (_rotl(A ^ B, B) + S[2 * i]) & _M32
        B = (_rotl(B ^ A, A) + S[2 * i + 1]) & _M32
    return A.to_bytes(4, "little") + B.to_bytes(4, "little")


def rc5_decrypt_block(S: list[int], block: bytes) -> bytes:
    if len(block) != RC5_BLOCK_BYTES:
        raise CryptoError("RC5 block must be 8 bytes")
    A = int.from_bytes(block[0:4], "little")
    B = int.from_bytes(block[4:8], "little")
    for i in range(RC5_ROUNDS, 0, -1):
        B = _rotr((B - S[2 * i + 1]) & _M32, A) ^ A
        A = _rotr((A - S[2 * i]) & _M32, B) ^ B
    A = (A - S[0]) & _M32
    B = (B - S[1]) & _M32
    return A.to_bytes(4, "little") + B.to_bytes(4, "little")


def rc5_ctr(key_or_schedule, nonce: int, data: bytes) -> bytes:
    """Counter-mode keystream XOR; encryption and decryption are the same op.

    The keystream block i is RC5(E, nonce + i), with the 64-bit counter
    encoded little-endian.  Nonce reuse under one key breaks confidentiality,
    so callers must keep (key, nonce) pairs unique.
    """
    S = key_or_schedule if isinstance(key_or_schedule, list) else rc5_key_schedule(key_or_schedule)
    out = bytearray(len(data))
    for i in range(0, len(data), RC5_BLOCK_BYTES):
        counter = ((nonce + i // RC5_BLOCK_BYTES) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        ks = rc5_encrypt_block(S, counter)
        chunk = data[i : i + RC5_BLOCK_BYTES]
        for j, byte in enumerate(chunk):
            out[i + j] = byte ^ ks[j]
    return bytes(out)


# ===== message authentication =====


def hmac_tag(key: bytes, message: bytes) -> bytes:
    """Standard HMAC-SHA256."""
    return _hmac.new(key, message, hashlib.sha256).digest()


def nested_hmac(group_key: bytes, pairwise_key: bytes, message: bytes) -> bytes:
    """Two-layer tag: inner HMAC under the pairwise key, outer under the group key.

    A forger must know both keys, so a node holding only the group key still
    cannot forge traffic for another pair.
    """
    return hmac_tag(group_key, hmac_tag(pairwise_key, message))


def tags_equal(a: bytes, b: bytes) -> bool:
    """Constant-time tag comparison."""
    return _hmac.compare_digest(a, b)


# ===== hybrid public-key sealing =====

_TAG_BYTES = 32


def pk_encrypt(curve: CurveParams, recipient_public, plaintext: bytes, rng: random.Random) -> bytes:
    """Seal plaintext for a public key: ephemeral ECDH, RC5-CTR, HMAC tag.

    Layout: eph_x || eph_y (curve.byte_length each) || tag (32) || ciphertext.
    The nonce is fixed at zero, safe because every call draws a fresh
    ephemeral key.
    """
    if not is_on_curve(curve, recipient_public) or recipient_public is None:
        raise CryptoError("recipient public key is not on the curve")
    eph = keypair_generate(curve, rng)
    key = ecdh_shared(curve, eph.private, recipient_public)
    ciphertext = rc5_ctr(key, 0, plaintext)
    tag = hmac_tag(key, ciphertext)
    size = curve.byte_length
    ex, ey = eph.public
    return ex.to_bytes(size, "big") + ey.to_bytes(size, "big") + tag + ciphertext


def pk_decrypt(curve: CurveParams, private: int, sealed: bytes) -> bytes:
    """Open a sealed payload; raises CryptoError on any tamper or truncation."""
    size = curve.byte_length
    header = 2 * size + _TAG_BYTES
    if len(sealed) < header:
        raise CryptoError("sealed payload truncated")
    eph_public = (
        int.from_bytes(sealed[:size], "big"),
        int.from_bytes(sealed[size : 2 * size], "big"),
    )
    if not is_on_curve(curve, eph_public):
        raise CryptoError("ephemeral public key is not on the curve")
    tag = sealed[2 * size : header]
    ciphertext = sealed[header:]
    key = ecdh_shared(curve, private, eph_public)
    if not tags_equal(tag, hmac_tag(key, ciphertext)):
        raise CryptoError("authentication tag mismatch")
    return rc5_ctr(key, 0, ciphertext)
