"""Hash-based symmetric encryption with key tags.

Two schemes, both masking the plaintext with fresh oracle output:

- single-key (the KDM-hardened workhorse):
  c = (R1, H(sk||R1) xor m), tag (R2, H(sk||R2))
- triple-key (gates table rows behind three keys at once):
  c = (R1,R2,R3, H(k1||R1) xor H(k2||R2) xor H(k3||R3) xor m)
  plus one tag per key

Every oracle query has the form tag_byte || key || pad, so mask queries and
tag queries can never collide, and neither can queries for payloads of
different lengths (the oracle family separates lengths by domain tag).

Decryption never verifies; row-selection logic belongs to the evaluator,
which always runs the tag check first.  Ver rejects on any length mismatch.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .oracle import OracleFamily
from .util import rand_bytes, xor_bytes

SymKey = bytes

_MASK = b"\x01"
_TAG = b"\x02"


@dataclass(frozen=True)
class KeyTag:
    pad: bytes
    digest: bytes


@dataclass(frozen=True)
class KdmCiphertext:
    r1: bytes
    masked: bytes
    tag: KeyTag


@dataclass(frozen=True)
class TripleCiphertext:
    pads: tuple[bytes, bytes, bytes]
    masked: bytes
    tags: tuple[KeyTag, KeyTag, KeyTag]


@dataclass
class CryptoParams:
    """Session-wide crypto context: key length, tag length, oracle family.

    kappa_bits and tag_len_bits are independent; long tags make row-selection
    ambiguity negligible even at toy key sizes.
    """

    kappa_bits: int
    oracles: OracleFamily
    tag_len_bits: int = 128

    def __post_init__(self):
        if self.kappa_bits % 8 != 0 or self.kappa_bits <= 0:
            raise ValueError(f"kappa must be a positive byte multiple, got {self.kappa_bits}")
        if self.tag_len_bits % 8 != 0 or self.tag_len_bits <= 0:
            raise ValueError("tag_len_bits must be a positive byte multiple")
        self._query_cache: dict[int, object] = {}

    @property
    def kappa_bytes(self) -> int:
        return self.kappa_bits // 8

    def query_fn(self, n_bits: int):
        fn = self._query_cache.get(n_bits)
        if fn is None:
            fn = self.oracles.for_len(n_bits).query
            self._query_cache[n_bits] = fn
        return fn


def keygen(params: CryptoParams, rng: random.Random) -> SymKey:
    """Sample a uniform kappa-bit key."""
    return rand_bytes(rng, params.kappa_bytes)


def _mask(params: CryptoParams, key: SymKey, pad: bytes, n_bytes: int) -> bytes:
    return params.query_fn(8 * n_bytes)(_MASK + key + pad)


def _tag_digest(params: CryptoParams, key: SymKey, pad: bytes) -> bytes:
    return params.query_fn(params.tag_len_bits)(_TAG + key + pad)


def make_tag(params: CryptoParams, key: SymKey, rng: random.Random) -> KeyTag:
    pad = rand_bytes(rng, params.kappa_bytes)
    return KeyTag(pad, _tag_digest(params, key, pad))


# ---------------------------------------------------------------------------
# single-key scheme

def kdm_enc_padded(params: CryptoParams, sk: SymKey, m: bytes,
                   r1: bytes, r2: bytes) -> KdmCiphertext:
    """Encrypt with caller-chosen pads (games rig pad reuse through this)."""
    if not m:
        raise ValueError("empty plaintext")
    masked = xor_bytes(_mask(params, sk, r1, len(m)), m)
    return KdmCiphertext(r1, masked, KeyTag(r2, _tag_digest(params, sk, r2)))


def kdm_enc(params: CryptoParams, sk: SymKey, m: bytes, rng: random.Random) -> KdmCiphertext:
    r1 = rand_bytes(rng, params.kappa_bytes)
    r2 = rand_bytes(rng, params.kappa_bytes)
    return kdm_enc_padded(params, sk, m, r1, r2)


def kdm_dec(params: CryptoParams, sk: SymKey, ct: KdmCiphertext) -> bytes:
    """Unmask. A wrong key yields garbage by design; callers verify first."""
    return xor_bytes(_mask(params, sk, ct.r1, len(ct.masked)), ct.masked)


def kdm_ver(params: CryptoParams, key: SymKey, tag: KeyTag) -> bool:
    if len(key) != params.kappa_bytes or len(tag.digest) != params.tag_len_bits // 8:
        return False
    return _tag_digest(params, key, tag.pad) == tag.digest


# ---------------------------------------------------------------------------
# triple-key scheme

def triple_enc_padded(params: CryptoParams, keys: tuple[SymKey, SymKey, SymKey],
                      m: bytes, pads: tuple[bytes, ...]) -> TripleCiphertext:
    if not m:
        raise ValueError("empty plaintext")
    k1, k2, k3 = keys
    if not len(k1) == len(k2) == len(k3):
        raise ValueError("keys must share one length")
    r1, r2, r3, r4, r5, r6 = pads
    mask_q = params.query_fn(8 * len(m))
    tag_q = params.query_fn(params.tag_len_bits)
    n = len(m)
    masked = (int.from_bytes(m, "little")
              ^ int.from_bytes(mask_q(_MASK + k1 + r1), "little")
              ^ int.from_bytes(mask_q(_MASK + k2 + r2), "little")
              ^ int.from_bytes(mask_q(_MASK + k3 + r3), "little")).to_bytes(n, "little")
    tags = (KeyTag(r4, tag_q(_TAG + k1 + r4)),
            KeyTag(r5, tag_q(_TAG + k2 + r5)),
            KeyTag(r6, tag_q(_TAG + k3 + r6)))
    return TripleCiphertext((r1, r2, r3), masked, tags)


def triple_enc(params: CryptoParams, k1: SymKey, k2: SymKey, k3: SymKey, m: bytes,
               rng: random.Random) -> TripleCiphertext:
    kb = params.kappa_bytes
    pads = rng.getrandbits(48 * kb).to_bytes(6 * kb, "little")
    return triple_enc_padded(params, (k1, k2, k3), m,
                             tuple(pads[i * kb:(i + 1) * kb] for i in range(6)))


def triple_dec(params: CryptoParams, k1: SymKey, k2: SymKey, k3: SymKey,
               ct: TripleCiphertext) -> bytes:
    m = ct.masked
    for key, pad in zip((k1, k2, k3), ct.pads):
        m = xor_bytes(m, _mask(params, key, pad, len(ct.masked)))
    return m


def triple_ver(params: CryptoParams, key: SymKey, index: int, ct: TripleCiphertext) -> bool:
    """Check whether key is the index-th (1-based) key of ct."""
    if index not in (1, 2, 3):
        raise ValueError(f"key index must be 1..3, got {index}")
    return kdm_ver(params, key, ct.tags[index - 1])
