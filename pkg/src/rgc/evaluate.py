"""Server-side evaluation of a garbled bundle on an encoded sparse state.

The encoded state keeps one kappa-bit register per logical qubit; a gate on
qubits (a,b,c) always finds its current wire keys in registers a,b,c, so the
register layout never changes shape during evaluation.  For each basis term,
a Toffoli step looks up the forward row opened by the term's key triple
(trying every row against the key tags, and insisting exactly one opens),
writes the decrypted output keys, and erases the input keys through the
backward row.  The backward payload must XOR the inputs to exactly zero -
that erasure is asserted for every distinct triple of every gate, and a
failure aborts the evaluation: leftover input keys would entangle the result
with junk registers.

Everything here sees only ciphertexts and tags.  This module has no access
to, and no dependency on, the key schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import symcrypt
from .circuit import Phase, Toffoli
from .garble import GarbledBundle, PhaseTable, ToffoliTables
from .sparse import SparseState, apply_phase
from .symcrypt import CryptoParams
from .util import bytes_to_int, int_to_bytes


class EvalError(RuntimeError):
    pass


class NoRowMatchError(EvalError):
    """No table row opens under the given keys: corrupted input."""


class AmbiguousRowError(EvalError):
    """Two rows verify under one key set: tag collision, refuse to guess."""


class ErasureError(EvalError):
    """Backward row failed to zero the consumed registers."""


@dataclass
class EvalStats:
    gates: int = 0
    terms_processed: int = 0
    rows_tried: int = 0
    ver_calls: int = 0           # forward row search (bounded by 8*3 per lookup)
    backward_ver_calls: int = 0  # erasure-side row search
    erasure_checks: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "EvalStats":
        return EvalStats(**json.loads(text))


@dataclass
class EvalContext:
    """Tracks which wire currently lives in which state register."""

    bundle: GarbledBundle
    live_registers: dict[int, str] = field(default_factory=dict)
    stats: EvalStats = field(default_factory=EvalStats)

    @staticmethod
    def for_bundle(bundle: GarbledBundle) -> "EvalContext":
        live = {w: f"q{i}" for i, w in enumerate(bundle.skeleton.input_wires)}
        return EvalContext(bundle, live)


def _match_unique(params: CryptoParams, keys: tuple[bytes, bytes, bytes],
                  rows: tuple[symcrypt.TripleCiphertext, ...], stats: EvalStats,
                  backward: bool = False) -> int:
    """Index of the single row all three tags accept; scans the whole table so
    an ambiguity cannot hide behind an early exit."""
    match = None
    checks = 0
    for idx, row in enumerate(rows):
        stats.rows_tried += 1
        ok = True
        for pos, key in enumerate(keys, start=1):
            checks += 1
            if not symcrypt.triple_ver(params, key, pos, row):
                ok = False
                break
        if ok:
            if match is not None:
                raise AmbiguousRowError(f"rows {match} and {idx} both verify")
            match = idx
    if backward:
        stats.backward_ver_calls += checks
    else:
        stats.ver_calls += checks
    if match is None:
        raise NoRowMatchError("no row verifies under the given key triple")
    return match


def eval_toffoli_term(params: CryptoParams, key_triple: tuple[bytes, bytes, bytes],
                      tables: ToffoliTables,
                      stats: EvalStats | None = None) -> tuple[bytes, bytes, bytes]:
    """Translate one input key triple to the output triple, checking that the
    backward table erases the inputs exactly."""
    stats = stats if stats is not None else EvalStats()
    kb = params.kappa_bytes
    fwd = _match_unique(params, key_triple, tables.forward, stats)
    payload = symcrypt.triple_dec(params, *key_triple, tables.forward[fwd])
    out = (payload[:kb], payload[kb:2 * kb], payload[2 * kb:3 * kb])
    bwd = _match_unique(params, out, tables.backward, stats, backward=True)
    back = symcrypt.triple_dec(params, *out, tables.backward[bwd])
    if (back[:kb], back[kb:2 * kb], back[2 * kb:3 * kb]) != key_triple:
        raise ErasureError("backward row does not cancel the input keys")
    stats.erasure_checks += 1
    return out


def eval_toffoli(params: CryptoParams, state: SparseState, gate: Toffoli,
                 tables: ToffoliTables, ctx: EvalContext) -> SparseState:
    kappa = params.kappa_bits
    kb = params.kappa_bytes
    offsets = [state.layout.offset(ctx.live_registers[w]) for w in gate.in_wires]
    mask = (1 << kappa) - 1
    clear = ~((mask << offsets[0]) | (mask << offsets[1]) | (mask << offsets[2]))

    # Superpositions repeat triples across terms; translate each distinct
    # triple once.  The memo also means the erasure check runs exactly once
    # per triple while covering every term carrying it.
    memo: dict[tuple[int, int, int], int] = {}
    new_terms: dict[int, complex] = {}
    for basis, amp in state.terms.items():
        triple = ((basis >> offsets[0]) & mask,
                  (basis >> offsets[1]) & mask,
                  (basis >> offsets[2]) & mask)
        packed = memo.get(triple)
        if packed is None:
            out = eval_toffoli_term(
                params,
                tuple(int_to_bytes(t, kb) for t in triple),
                tables, ctx.stats)
            packed = (bytes_to_int(out[0]) << offsets[0]
                      | bytes_to_int(out[1]) << offsets[1]
                      | bytes_to_int(out[2]) << offsets[2])
            memo[triple] = packed
        new_terms[(basis & clear) | packed] = amp
        ctx.stats.terms_processed += 1
    if len(new_terms) != len(state.terms):
        raise EvalError("toffoli step collided terms; evaluation not reversible")

    for win, wout in zip(gate.in_wires, gate.out_wires):
        ctx.live_registers[wout] = ctx.live_registers.pop(win)
    return SparseState(state.layout, new_terms, check=False)


def eval_phase(params: CryptoParams, state: SparseState, gate: Phase,
               table: PhaseTable, ctx: EvalContext) -> SparseState:
    """Open the phase row for each term's key and multiply by omega^value.

    The scratch register holding the opened value is written and unwritten by
    the same table lookup, so it never appears in the state we keep; only the
    phase survives.  A negative gate applies omega^(-value), flipping the
    surviving relative phase.
    """
    offset = state.layout.offset(ctx.live_registers[gate.wire])
    kappa = params.kappa_bits
    mask = (1 << kappa) - 1
    denom = 1 << gate.denom_exp
    modulus = 2 * denom

    values: dict[int, int] = {}

    def opened(segment: int) -> int:
        value = values.get(segment)
        if value is None:
            key = int_to_bytes(segment, params.kappa_bytes)
            match = None
            for idx, row in enumerate(table.rows):
                ctx.stats.rows_tried += 1
                ctx.stats.ver_calls += 1
                if symcrypt.kdm_ver(params, key, row.tag):
                    if match is not None:
                        raise AmbiguousRowError(f"phase rows {match} and {idx} both verify")
                    match = idx
            if match is None:
                raise NoRowMatchError("no phase row verifies under the term's key")
            value = int.from_bytes(symcrypt.kdm_dec(params, key, table.rows[match]), "big")
            if value >= modulus:
                raise EvalError("phase payload out of range")
            values[segment] = value
        ctx.stats.terms_processed += 1
        return value

    return apply_phase(state, lambda basis: gate.sign * opened((basis >> offset) & mask),
                       denom)


def eval_bundle(params: CryptoParams, encoded: SparseState,
                bundle: GarbledBundle) -> tuple[SparseState, EvalStats]:
    """Run every garbled gate in circuit order.

    The result stays encoded: register i finally holds the keys of qubit i's
    output wire.  Any gate-level failure aborts with the gate index attached.
    """
    circ = bundle.skeleton
    if encoded.layout.total_bits != circ.num_inputs * params.kappa_bits:
        raise EvalError("encoded state width does not match the skeleton")
    ctx = EvalContext.for_bundle(bundle)
    state = encoded
    for index, (gate, table) in enumerate(zip(circ.gates, bundle.tables)):
        try:
            if isinstance(gate, Toffoli):
                state = eval_toffoli(params, state, gate, table, ctx)
            else:
                state = eval_phase(params, state, gate, table, ctx)
        except EvalError as exc:
            raise type(exc)(f"gate {index}: {exc}") from None
        ctx.stats.gates += 1
    return state, ctx.stats
