"""C+P circuit representation: Toffoli gates plus single-qubit phase gates.

Circuits are described at two levels.  The logical level talks about qubits
(0..N-1) and is what the text format and the direct simulator use.  The wire
level is a single-assignment view used by key generation and garbling: a
Toffoli consumes its three qubits' current wires and drives three fresh ones;
a phase gate keeps its wire.  A circuit with N inputs and L gates therefore
uses at most N+3L wires.

Angles are carried exactly as (sign, d) dyadic pairs meaning R_Z(sign*pi/2^d);
no floating-point angle ever enters the IR.

Text format (UTF-8, line oriented, ``#`` comments)::

    inputs 3
    toff 0 1 2        # controls 0,1 target 2
    phase 0 2         # R_Z(pi/4) on qubit 0
    phase 1 1 neg     # R_Z(-pi/2) on qubit 1

The universal machine at the bottom of this module reduces any C+P circuit to
a fixed program interpreted by a fixed circuit, so that delegating the fixed
circuit hides which program ran (only N, D and the length cap leak).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from . import sparse
from .sparse import SparseState

DEFAULT_MAX_DENOM_EXP = 16

LogicalGate = tuple  # ("toff", a, b, c) | ("phase", a, d, sign)


def toff(a: int, b: int, c: int) -> LogicalGate:
    return ("toff", a, b, c)


def phase(a: int, d: int, sign: int = 1) -> LogicalGate:
    return ("phase", a, d, sign)


class CircuitError(ValueError):
    pass


class CircuitSyntaxError(CircuitError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Toffoli:
    qubits: tuple[int, int, int]      # (control, control, target)
    in_wires: tuple[int, int, int]
    out_wires: tuple[int, int, int]


@dataclass(frozen=True)
class Phase:
    qubit: int
    wire: int
    denom_exp: int                    # gate is R_Z(sign * pi / 2^denom_exp)
    sign: int = 1


Gate = Toffoli | Phase


@dataclass(frozen=True)
class CPCircuit:
    num_inputs: int
    gates: tuple[Gate, ...]
    num_wires: int
    output_wires: tuple[int, ...]

    @property
    def input_wires(self) -> tuple[int, ...]:
        return tuple(range(self.num_inputs))

    def gate_count(self) -> int:
        return len(self.gates)


def allocate_wires(logical_gates: Sequence[LogicalGate], n_inputs: int) -> CPCircuit:
    """Assign single-use wire indices to a logical gate list."""
    if n_inputs <= 0:
        raise CircuitError("circuit needs at least one input")
    current = list(range(n_inputs))
    next_wire = n_inputs
    gates: list[Gate] = []
    for g in logical_gates:
        kind = g[0]
        if kind == "toff":
            a, b, c = g[1], g[2], g[3]
            if len({a, b, c}) != 3:
                raise CircuitError(f"toffoli qubits must be distinct, got {a} {b} {c}")
            for q in (a, b, c):
                if not 0 <= q < n_inputs:
                    raise CircuitError(f"qubit {q} out of range (N={n_inputs})")
            in_wires = (current[a], current[b], current[c])
            out_wires = (next_wire, next_wire + 1, next_wire + 2)
            next_wire += 3
            current[a], current[b], current[c] = out_wires
            gates.append(Toffoli((a, b, c), in_wires, out_wires))
        elif kind == "phase":
            a, d, sign = g[1], g[2], g[3]
            if not 0 <= a < n_inputs:
                raise CircuitError(f"qubit {a} out of range (N={n_inputs})")
            if d < 0:
                raise CircuitError(f"negative phase exponent {d}")
            if sign not in (1, -1):
                raise CircuitError(f"phase sign must be +-1, got {sign}")
            gates.append(Phase(a, current[a], d, sign))
        else:
            raise CircuitError(f"unknown gate kind {kind!r}")
    circ = CPCircuit(n_inputs, tuple(gates), next_wire, tuple(current))
    validate(circ)
    return circ


def validate(circ: CPCircuit) -> None:
    """Check the single-assignment wire discipline and the N+3L bound."""
    n_toffoli = sum(1 for g in circ.gates if isinstance(g, Toffoli))
    if circ.num_wires > circ.num_inputs + 3 * len(circ.gates):
        raise CircuitError("wire count exceeds N+3L")
    if circ.num_wires != circ.num_inputs + 3 * n_toffoli:
        raise CircuitError("wire count does not match Toffoli allocations")
    produced = set(range(circ.num_inputs))
    consumed: set[int] = set()
    for g in circ.gates:
        if isinstance(g, Toffoli):
            for w in g.in_wires:
                if w not in produced or w in consumed:
                    raise CircuitError(f"wire {w} read before production or reused")
            consumed.update(g.in_wires)
            for w in g.out_wires:
                if w in produced:
                    raise CircuitError(f"wire {w} produced twice")
            produced.update(g.out_wires)
        else:
            if g.wire not in produced or g.wire in consumed:
                raise CircuitError(f"phase wire {g.wire} not live")
    live = produced - consumed
    if set(circ.output_wires) != live or len(circ.output_wires) != circ.num_inputs:
        raise CircuitError("output wires must be exactly the unconsumed wires")


# ---------------------------------------------------------------------------
# text format

def parse_circuit(text: str, max_denom_exp: int = DEFAULT_MAX_DENOM_EXP) -> CPCircuit:
    n_inputs = None
    logical: list[LogicalGate] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "inputs":
                if n_inputs is not None:
                    raise CircuitSyntaxError(line_no, "duplicate inputs header")
                n_inputs = int(fields[1])
                if len(fields) != 2 or n_inputs <= 0:
                    raise CircuitSyntaxError(line_no, "inputs needs one positive count")
            elif fields[0] == "toff":
                if n_inputs is None:
                    raise CircuitSyntaxError(line_no, "gate before inputs header")
                if len(fields) != 4:
                    raise CircuitSyntaxError(line_no, "toff needs 3 qubit indices")
                a, b, c = (int(f) for f in fields[1:])
                if len({a, b, c}) != 3:
                    raise CircuitSyntaxError(line_no, f"repeated qubit in {line!r}")
                logical.append(toff(a, b, c))
            elif fields[0] == "phase":
                if n_inputs is None:
                    raise CircuitSyntaxError(line_no, "gate before inputs header")
                if len(fields) not in (3, 4) or (len(fields) == 4 and fields[3] != "neg"):
                    raise CircuitSyntaxError(line_no, "phase needs: qubit, exponent, [neg]")
                a, d = int(fields[1]), int(fields[2])
                if d > max_denom_exp:
                    raise CircuitSyntaxError(line_no, f"exponent {d} above bound {max_denom_exp}")
                logical.append(phase(a, d, -1 if len(fields) == 4 else 1))
            else:
                raise CircuitSyntaxError(line_no, f"unknown directive {fields[0]!r}")
        except ValueError as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitSyntaxError(line_no, str(exc)) from None
    if n_inputs is None:
        raise CircuitSyntaxError(0, "missing inputs header")
    try:
        return allocate_wires(logical, n_inputs)
    except CircuitError as exc:
        raise CircuitError(f"invalid circuit: {exc}") from None


def format_circuit(circ: CPCircuit) -> str:
    lines = [f"inputs {circ.num_inputs}"]
    for g in circ.gates:
        if isinstance(g, Toffoli):
            lines.append("toff {} {} {}".format(*g.qubits))
        else:
            suffix = " neg" if g.sign < 0 else ""
            lines.append(f"phase {g.qubit} {g.denom_exp}{suffix}")
    return "\n".join(lines) + "\n"


def random_circuit(rng: random.Random, n_qubits: int, n_gates: int,
                   max_denom_exp: int = 3, toffoli_bias: float = 0.5) -> CPCircuit:
    logical: list[LogicalGate] = []
    for _ in range(n_gates):
        if n_qubits >= 3 and rng.random() < toffoli_bias:
            logical.append(toff(*rng.sample(range(n_qubits), 3)))
        else:
            logical.append(phase(rng.randrange(n_qubits), rng.randint(0, max_denom_exp),
                                 rng.choice((1, -1))))
    return allocate_wires(logical, n_qubits)


# ---------------------------------------------------------------------------
# direct simulation (the oracle the garbled path is checked against)

def simulate(circ: CPCircuit, state: SparseState) -> SparseState:
    """Apply the circuit gate by gate to a logical state (one bit per qubit)."""
    if state.layout.total_bits != circ.num_inputs:
        raise sparse.LayoutMismatchError("state width != circuit inputs")
    for g in circ.gates:
        if isinstance(g, Toffoli):
            a, b, c = g.qubits
            state = sparse.apply_classical(
                state, lambda v, a=a, b=b, c=c: v ^ ((((v >> a) & (v >> b)) & 1) << c))
        else:
            q, s = g.qubit, g.sign
            state = sparse.apply_phase(
                state, lambda v, q=q, s=s: s * ((v >> q) & 1), 1 << g.denom_exp)
    return state


def eval_classical(circ: CPCircuit, bits: int) -> int:
    """Evaluate the Toffoli part on one basis string (phases act trivially)."""
    for g in circ.gates:
        if isinstance(g, Toffoli):
            a, b, c = g.qubits
            bits ^= (((bits >> a) & (bits >> b)) & 1) << c
    return bits


# ---------------------------------------------------------------------------
# phase-angle decomposition

def decompose_phase(angle_num: int | float, denom_exp: int | None,
                    max_denom_exp: int = DEFAULT_MAX_DENOM_EXP) -> list[tuple[int, int]]:
    """Split R_Z(theta) into R_Z(pi/2^j) factors, returned as (j, sign) pairs.

    Exact form: theta = angle_num * pi / 2^denom_exp with integer angle_num.
    Float form (denom_exp None): angle_num is theta in radians, binary-expanded
    to max_denom_exp bits, so the composition is within pi/2^max_denom_exp.
    All returned signs are +1: negative angles wrap around mod 2*pi.
    """
    if denom_exp is None:
        frac = (angle_num / math.pi) % 2.0
        k = round(frac * (1 << max_denom_exp)) % (1 << (max_denom_exp + 1))
        d = max_denom_exp
    else:
        if denom_exp > max_denom_exp:
            raise CircuitError(f"exponent {denom_exp} above bound {max_denom_exp}")
        k = int(angle_num) % (1 << (denom_exp + 1))
        d = denom_exp
    gates = []
    for j in range(d + 1):
        if (k >> (d - j)) & 1:
            gates.append((j, 1))
    return gates


def composed_phase_angle(gates: Sequence[tuple[int, int]]) -> float:
    return sum(sign * math.pi / (1 << j) for j, sign in gates)


# ---------------------------------------------------------------------------
# universal machine
#
# Gate codes, canonically enumerated (the source text counts the choices but
# never fixes an assignment; this one is ours and is stable):
#
#   [0, 3N)             SWAP(data wire w, aux a): code 3w + a
#   3N                  Toffoli on the three aux wires
#   [3N+1, 3N+1+N*D)    R_Z(pi/2^d) on data wire w, d in 1..D: 3N+1 + w*D + (d-1)
#   3N+1+N*D            identity (padding)
#
# d=0 phases (bare Z) are compiled as two d=1 codes, so the code table stays
# at the three source gate types.  The code width is taken from the documented
# bound with N' = N+3; the actual table is smaller and must fit underneath.

@dataclass(frozen=True)
class GateDescription:
    code: int
    width: int

    def bits(self) -> tuple[int, ...]:
        """MSB-first bit pattern as fed to the description wires."""
        return tuple((self.code >> (self.width - 1 - j)) & 1 for j in range(self.width))


@dataclass(frozen=True)
class UniversalMachine:
    circuit: CPCircuit
    n_data: int
    max_denom_exp: int
    slots: int
    code_width: int
    n_codes: int
    aux_qubits: tuple[int, int, int]
    const_qubits: tuple[int, int]
    desc_qubits: tuple[tuple[int, ...], ...]   # per slot, MSB first
    scratch_qubits: tuple[int, ...]

    @property
    def identity_code(self) -> int:
        return self.n_codes - 1

    def swap_code(self, wire: int, aux: int) -> int:
        return 3 * wire + aux

    @property
    def toffoli_code(self) -> int:
        return 3 * self.n_data

    def phase_code(self, wire: int, d: int) -> int:
        return 3 * self.n_data + 1 + wire * self.max_denom_exp + (d - 1)

    def compile_codes(self, circ: CPCircuit) -> list[int]:
        codes: list[int] = []
        for g in circ.gates:
            if isinstance(g, Toffoli):
                swaps = [self.swap_code(q, i) for i, q in enumerate(g.qubits)]
                codes += swaps + [self.toffoli_code] + swaps
            else:
                k = g.sign % (1 << (g.denom_exp + 1))
                for j in range(g.denom_exp + 1):
                    if (k >> (g.denom_exp - j)) & 1:
                        if j == 0:
                            codes += [self.phase_code(g.qubit, 1)] * 2
                        else:
                            codes.append(self.phase_code(g.qubit, j))
        return codes

    def describe(self, circ: CPCircuit) -> list[GateDescription]:
        """Compile a circuit to the padded description program."""
        if circ.num_inputs != self.n_data:
            raise CircuitError("circuit width differs from the machine's")
        codes = self.compile_codes(circ)
        if len(codes) > self.slots:
            raise CircuitError(f"program needs {len(codes)} slots, machine has {self.slots}")
        codes += [self.identity_code] * (self.slots - len(codes))
        return [GateDescription(c, self.code_width) for c in codes]

    def prep_bits(self, desc: Sequence[GateDescription]) -> int:
        """Initial basis value of every non-data qubit (consts 1, desc bits,
        aux and scratch 0), positioned for OR-ing with the data bits."""
        if len(desc) != self.slots:
            raise CircuitError("description length differs from slot count")
        value = 0
        for q in self.const_qubits:
            value |= 1 << q
        for slot_qubits, d in zip(self.desc_qubits, desc):
            for qubit, bit in zip(slot_qubits, d.bits()):
                value |= bit << qubit
        return value


def _demux_plan(n_codes: int, width: int) -> list[tuple[int, ...]]:
    """Prefixes (MSB-first bit tuples) of length >= 2 that cover [0, n_codes),
    in emission order (sorted = preorder by value)."""
    prefixes = []
    for depth in range(2, width + 1):
        for value in range(1 << depth):
            lo = value << (width - depth)
            if lo < n_codes:
                prefixes.append(tuple((value >> (depth - 1 - j)) & 1 for j in range(depth)))
    return prefixes


def universalize(circ: CPCircuit, n_qubits: int, max_denom_exp: int,
                 max_gates: int) -> tuple[UniversalMachine, list[GateDescription]]:
    """Build the fixed interpreter circuit for (n_qubits, max_denom_exp,
    max_gates) and the description program that makes it compute circ.

    The machine depends only on those three parameters, so equal-shaped
    circuits are indistinguishable from the machine alone.
    """
    if circ.num_inputs != n_qubits:
        raise CircuitError("circuit width differs from declared qubit count")
    if max_denom_exp < 1:
        raise CircuitError("universal machine needs max_denom_exp >= 1")
    if any(isinstance(g, Phase) and g.denom_exp > max_denom_exp for g in circ.gates):
        raise CircuitError("circuit uses a finer phase than the machine supports")
    if len(circ.gates) > max_gates:
        raise CircuitError(f"circuit has {len(circ.gates)} gates, cap is {max_gates}")

    n = n_qubits
    d_max = max_denom_exp
    n_codes = 3 * n + 1 + n * d_max + 1
    width = math.ceil(math.log2(3 * (n + 3) + 1 + (n + 3) * d_max))
    assert n_codes <= (1 << width), "code table exceeds the documented width"
    slots = max(7, d_max + 2) * max_gates

    # qubit map
    data = list(range(n))
    aux = (n, n + 1, n + 2)
    c0, c1 = n + 3, n + 4
    pos = n + 5
    desc_qubits = []
    for _ in range(slots):
        desc_qubits.append(tuple(range(pos, pos + width)))
        pos += width
    neg = list(range(pos, pos + width)); pos += width
    plan = _demux_plan(n_codes, width)
    tree = {prefix: pos + i for i, prefix in enumerate(plan)}
    pos += len(plan)
    opanc = pos; pos += 1
    total_qubits = pos
    scratch = tuple(neg) + tuple(tree.values()) + (opanc,)

    gates: list[LogicalGate] = []

    def cnot(a, t):
        gates.append(toff(c0, a, t))

    def bit_or_neg(slot_bits, depth, want):
        return slot_bits[depth] if want else neg[depth]

    for slot_bits in desc_qubits:
        # negated copies of this slot's description bits
        neg_gates = []
        for j in range(width):
            neg_gates += [toff(c0, slot_bits[j], neg[j]), toff(c0, c1, neg[j])]
        gates += neg_gates
        # demux tree: one match wire per prefix of depth >= 2
        tree_gates = []
        for prefix in plan:
            depth = len(prefix)
            parent = (tree[prefix[:-1]] if depth > 2
                      else bit_or_neg(slot_bits, 0, prefix[0]))
            tree_gates.append(toff(parent, bit_or_neg(slot_bits, depth - 1, prefix[-1]),
                                   tree[prefix]))
        gates += tree_gates
        # code-controlled operations, canonical order
        for code in range(n_codes - 1):       # identity emits nothing
            pattern = tuple((code >> (width - 1 - j)) & 1 for j in range(width))
            m = tree[pattern]
            if code < 3 * n:
                w, a = data[code // 3], aux[code % 3]
                cnot(a, w)
                gates.append(toff(m, w, a))
                cnot(a, w)
            elif code == 3 * n:
                gates.append(toff(m, aux[0], opanc))
                gates.append(toff(opanc, aux[1], aux[2]))
                gates.append(toff(m, aux[0], opanc))
            else:
                rel = code - (3 * n + 1)
                w, d = data[rel // d_max], rel % d_max + 1
                gates.append(toff(m, w, opanc))
                gates.append(phase(opanc, d))
                gates.append(toff(m, w, opanc))
        # uncompute tree and negated copies
        gates += [g for g in reversed(tree_gates)]
        gates += [g for g in reversed(neg_gates)]

    machine = UniversalMachine(
        circuit=allocate_wires(gates, total_qubits),
        n_data=n,
        max_denom_exp=d_max,
        slots=slots,
        code_width=width,
        n_codes=n_codes,
        aux_qubits=aux,
        const_qubits=(c0, c1),
        desc_qubits=tuple(desc_qubits),
        scratch_qubits=scratch,
    )
    return machine, machine.describe(circ)
