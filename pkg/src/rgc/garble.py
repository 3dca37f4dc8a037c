"""Reversible garbled tables for C+P circuits.

A Toffoli gate garbles into two tables of eight rows each: the forward table
encrypts the three output-wire keys under the three input-wire keys (one row
per input triple (u,v,w), output bits (u, v, w xor uv)), and the backward
table encrypts the input keys under the output keys.  Evaluating forward and
then using the backward row to erase the inputs makes the whole step a basis
permutation, which is why it can run on superpositions.  Both tables are
shuffled independently; the evaluator rediscovers rows through the key tags.

A phase gate garbles into two single-key rows: key for 0 opens a random
m, key for 1 opens m+1.  The evaluator writes the opened value into a scratch
register, phases it by omega^value (omega = exp(i*pi/2^d)), and unwrites it;
only the +1 difference survives as a relative phase, m itself becomes an
unobservable global factor.  m lives in Z_{2n} (n = 2^d): omega has order 2n,
and only the difference of the two entries matters, so the wraparound
representation is sound.

The row payloads never include which logical bits they correspond to; the
association exists only through which keys verify.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import symcrypt
from .circuit import CPCircuit, Phase, Toffoli
from .encoding import KeySchedule
from .symcrypt import CryptoParams, KdmCiphertext, TripleCiphertext
from .util import spawn_rngs


@dataclass(frozen=True)
class ToffoliTables:
    forward: tuple[TripleCiphertext, ...]
    backward: tuple[TripleCiphertext, ...]


@dataclass(frozen=True)
class PhaseTable:
    rows: tuple[KdmCiphertext, KdmCiphertext]
    denom_exp: int

    @property
    def payload_bytes(self) -> int:
        return (self.denom_exp + 1 + 7) // 8   # ceil(log2(2n) / 8), n = 2^d


@dataclass(frozen=True)
class GarbledBundle:
    """Everything the evaluator receives about the circuit: the public
    skeleton (gate types and wire topology) and one table per gate, in
    circuit order.  No key material appears outside the ciphertexts."""

    skeleton: CPCircuit
    tables: tuple[ToffoliTables | PhaseTable, ...]
    kappa_bits: int
    tag_len_bits: int

    def __post_init__(self):
        if len(self.tables) != len(self.skeleton.gates):
            raise ValueError("one table per gate required")


def phase_payload(value: int, denom_exp: int) -> bytes:
    return value.to_bytes((denom_exp + 1 + 7) // 8, "big")


def garble_toffoli(params: CryptoParams, gate: Toffoli, schedule: KeySchedule,
                   rng: random.Random) -> ToffoliTables:
    w1, w2, w3 = (schedule.pairs[w] for w in gate.in_wires)
    v1, v2, v3 = (schedule.pairs[w] for w in gate.out_wires)
    forward, backward = [], []
    for u in (0, 1):
        for v in (0, 1):
            for w in (0, 1):
                in_keys = (w1[u], w2[v], w3[w])
                out_keys = (v1[u], v2[v], v3[w ^ (u & v)])
                forward.append(symcrypt.triple_enc(params, *in_keys,
                                                   b"".join(out_keys), rng))
                backward.append(symcrypt.triple_enc(params, *out_keys,
                                                    b"".join(in_keys), rng))
    rng.shuffle(forward)
    rng.shuffle(backward)
    return ToffoliTables(tuple(forward), tuple(backward))


def garble_phase(params: CryptoParams, gate: Phase, schedule: KeySchedule,
                 rng: random.Random) -> PhaseTable:
    k0, k1 = schedule.pairs[gate.wire]
    modulus = 2 << gate.denom_exp          # 2n
    m0 = rng.randrange(modulus)
    rows = [
        symcrypt.kdm_enc(params, k0, phase_payload(m0, gate.denom_exp), rng),
        symcrypt.kdm_enc(params, k1, phase_payload((m0 + 1) % modulus, gate.denom_exp), rng),
    ]
    rng.shuffle(rows)
    return PhaseTable(tuple(rows), gate.denom_exp)


def garble_circuit(params: CryptoParams, circ: CPCircuit, schedule: KeySchedule,
                   rng: random.Random) -> GarbledBundle:
    if schedule.num_wires != circ.num_wires:
        raise ValueError("schedule does not cover the circuit's wires")
    # One pre-split stream per gate: garbling order never shifts randomness.
    streams = spawn_rngs(rng, len(circ.gates))
    tables: list[ToffoliTables | PhaseTable] = []
    for gate, gate_rng in zip(circ.gates, streams):
        if isinstance(gate, Toffoli):
            tables.append(garble_toffoli(params, gate, schedule, gate_rng))
        else:
            tables.append(garble_phase(params, gate, schedule, gate_rng))
    return GarbledBundle(circ, tuple(tables), params.kappa_bits, params.tag_len_bits)


# ---------------------------------------------------------------------------
# revealed-key closure
#
# Opening a table row requires the full key triple of its source side, so the
# set of wires whose keys an evaluator can learn from a revealed set grows by
# exactly one rule: once all three input wires of a Toffoli are covered, its
# three output wires follow.  Phase rows reveal no keys at all.

def closure_pairs(revealed: Iterable[int],
                  pairs: Sequence[tuple[tuple[int, ...], tuple[int, ...]]]) -> frozenset[int]:
    """Least fixed point of: S subset of the set implies T joins it."""
    covered = set(revealed)
    grew = True
    while grew:
        grew = False
        for sources, targets in pairs:
            if set(sources) <= covered and not set(targets) <= covered:
                covered.update(targets)
                grew = True
    return frozenset(covered)


def closure(revealed: Iterable[int], circ: CPCircuit) -> frozenset[int]:
    """Wire-level closure of a revealed wire set under the circuit's gates."""
    wires = set(revealed)
    if not wires <= set(range(circ.num_wires)):
        raise ValueError("revealed set contains unknown wires")
    pairs = [(g.in_wires, g.out_wires) for g in circ.gates if isinstance(g, Toffoli)]
    return closure_pairs(wires, pairs)
