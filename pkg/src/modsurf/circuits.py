"""Deterministic gate schedules for stabiliser measurement protocols.

A schedule is a pure function of (layout, parameters): same inputs, same
events, byte-identical dumps.  X-basis preparation and readout are emitted
in lowered form (|0> init plus Hadamard, Hadamard plus Z measurement), so
the single-qubit gate noise they carry is explicit.

Plaquette CNOTs run in a fixed N, W, E, S order, identical for X and Z
plaquettes; gates with the same orientation act in parallel within a step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .topology import ModuleRole, NetworkLayout, QubitKind


class ProtocolError(ValueError):
    """Raised when a protocol does not apply to the given layout."""


DANCE_ORDER = ("N", "W", "E", "S")

#: Steps consumed by one full stabiliser round (init, H, 4 CNOTs, H, measure).
ROUND_STEPS = 8


@dataclass(frozen=True)
class GateEvent:
    step: int
    kind: str  # "init" | "h" | "cnot" | "measure" | "epr"
    qubits: tuple[int, ...]
    basis: str | None = None  # init / measure only
    distributed: bool = False  # cnot only
    edge_id: int | None = None  # index into layout.distributed_edges()
    noisy: bool = True
    forward: tuple[str, int] | None = None  # byproduct (pauli, target qubit)
    tag: tuple | None = None  # measurement bookkeeping key

    def dump_line(self) -> str:
        parts = [str(self.step), self.kind]
        if self.basis:
            parts.append(self.basis)
        parts.extend(str(q) for q in self.qubits)
        if self.distributed:
            parts.append("distributed")
        return " ".join(parts)


@dataclass(frozen=True)
class SegmentSpec:
    """One protocol segment: which module-level merge runs, for how long."""

    kind: str  # "X" | "Z" | "Q"
    rounds: int
    noisy: bool = True

    def __post_init__(self):
        # "F" runs flat full-lattice rounds with every module active.
        if self.kind not in ("X", "Z", "Q", "F"):
            raise ValueError(f"segment kind {self.kind!r} not in X/Z/Q/F")
        if self.rounds < 1:
            raise ValueError("segment needs at least one round")


@dataclass(frozen=True)
class ProtocolParams:
    """Rounds per segment and number of super-rounds to schedule."""

    n: int
    L_rounds: int

    @staticmethod
    def default(layout: NetworkLayout, L_rounds: int | None = None) -> "ProtocolParams":
        return ProtocolParams(n=(layout.D + 1) // 2, L_rounds=L_rounds or layout.L)


@dataclass(frozen=True)
class PlaquetteRecord:
    """One scheduled plaquette measurement."""

    anc: int
    seg_idx: int
    round_idx: int  # global round counter within the window
    kind: str  # "X" | "Z"
    support: frozenset
    key: tuple


@dataclass(frozen=True)
class ReadoutRecord:
    qubit: int
    seg_idx: int
    basis: str
    key: tuple


@dataclass(frozen=True)
class InitRecord:
    qubit: int
    seg_idx: int
    basis: str


@dataclass
class GateSchedule:
    """Ordered events plus the measurement bookkeeping needed downstream."""

    events: list[GateEvent] = field(default_factory=list)
    segments: list[SegmentSpec] = field(default_factory=list)
    plaquettes: list[PlaquetteRecord] = field(default_factory=list)
    readouts: list[ReadoutRecord] = field(default_factory=list)
    inits: list[InitRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return max((e.step for e in self.events), default=-1) + 1

    def dump_lines(self) -> list[str]:
        return [e.dump_line() for e in self.events]

    def dump(self) -> str:
        return "\n".join(self.dump_lines()) + "\n"


_SEGMENT_ROLES = {
    "Q": (ModuleRole.Q,),
    "X": (ModuleRole.Q, ModuleRole.X),
    "Z": (ModuleRole.Q, ModuleRole.Z),
    "F": (ModuleRole.Q, ModuleRole.X, ModuleRole.Z),
}

_ANCILLA_BASIS = {"X": "Z", "Z": "X"}  # data prep/readout basis per merge kind


class _Builder:
    """Accumulates events for a window over a fixed region."""

    def __init__(
        self,
        layout: NetworkLayout,
        scheduled: list[tuple[int, int]] | None = None,
        passive: list[tuple[int, int]] | None = None,
    ):
        self.layout = layout
        self.scheduled = list(scheduled) if scheduled is not None else layout.modules()
        self.passive = list(passive) if passive is not None else []
        self.sched = GateSchedule()
        self.step = 0
        self.round_counter = 0
        self._edge_index = {}
        for i, e in enumerate(layout.distributed_edges()):
            self._edge_index[(e.qubit_a, e.qubit_b)] = i
            self._edge_index[(e.qubit_b, e.qubit_a)] = i

    # -- region helpers ------------------------------------------------------

    def _active_data(self, seg_kind: str) -> set[int]:
        roles = _SEGMENT_ROLES[seg_kind]
        data: set[int] = set()
        for m in self.scheduled + self.passive:
            role = self.layout.module_role(m)
            if role in roles or (m in self.passive and role is ModuleRole.Q):
                data.update(self.layout.module_data(m))
        return data

    def _active_ancillas(self, seg_kind: str) -> list[int]:
        roles = _SEGMENT_ROLES[seg_kind]
        ancs = []
        for m in self.scheduled:
            if self.layout.module_role(m) in roles:
                ancs.extend(
                    q
                    for q in self.layout.module_qubits(m)
                    if self.layout.kind(q) is not QubitKind.DATA
                )
        return sorted(ancs)

    def _merge_modules(self, seg_kind: str) -> list[tuple[int, int]]:
        if seg_kind == "Q":
            return []
        role = ModuleRole.X if seg_kind == "X" else ModuleRole.Z
        return [m for m in self.scheduled if self.layout.module_role(m) is role]

    # -- event emission ------------------------------------------------------

    def _emit(self, **kw):
        self.sched.events.append(GateEvent(step=self.step, **kw))

    def segment(self, spec: SegmentSpec, seg_idx: int):
        lay = self.layout
        merge_mods = self._merge_modules(spec.kind)
        data_basis = _ANCILLA_BASIS.get(spec.kind)

        # Merge-module data preparation (|0> for X merges, |+> for Z merges).
        if merge_mods:
            for m in merge_mods:
                for q in sorted(lay.module_data(m)):
                    self._emit(kind="init", qubits=(q,), basis="Z", noisy=spec.noisy)
                    self.sched.inits.append(InitRecord(q, seg_idx, data_basis))
            self.step += 1
            if data_basis == "X":
                for m in merge_mods:
                    for q in sorted(lay.module_data(m)):
                        self._emit(kind="h", qubits=(q,), noisy=spec.noisy)
            self.step += 1

        active_data = self._active_data(spec.kind)
        ancillas = self._active_ancillas(spec.kind)
        supports = {}
        for anc in ancillas:
            supports[anc] = {
                d: q for d, q in lay.plaquette(anc).items() if q in active_data
            }

        for _ in range(spec.rounds):
            self._round(ancillas, supports, spec, seg_idx)

        # Merge-module data readout (Z basis for X merges, X basis for Z).
        if merge_mods:
            if data_basis == "X":
                for m in merge_mods:
                    for q in sorted(lay.module_data(m)):
                        self._emit(kind="h", qubits=(q,), noisy=spec.noisy)
            self.step += 1
            for m in merge_mods:
                for q in sorted(lay.module_data(m)):
                    key = ("r", q, seg_idx)
                    self._emit(
                        kind="measure",
                        qubits=(q,),
                        basis="Z",
                        noisy=spec.noisy,
                        tag=key,
                    )
                    self.sched.readouts.append(ReadoutRecord(q, seg_idx, data_basis, key))
            self.step += 1

    def _round(self, ancillas, supports, spec: SegmentSpec, seg_idx: int):
        lay = self.layout
        x_ancs = [a for a in ancillas if lay.kind(a) is QubitKind.ANC_X]

        for anc in ancillas:
            self._emit(kind="init", qubits=(anc,), basis="Z", noisy=spec.noisy)
        self.step += 1
        for anc in x_ancs:
            self._emit(kind="h", qubits=(anc,), noisy=spec.noisy)
        self.step += 1

        for direction in DANCE_ORDER:
            for anc in ancillas:
                data = supports[anc].get(direction)
                if data is None:
                    continue
                if lay.kind(anc) is QubitKind.ANC_X:
                    control, target = anc, data
                else:
                    control, target = data, anc
                edge_id = self._edge_index.get((anc, data))
                self._emit(
                    kind="cnot",
                    qubits=(control, target),
                    distributed=edge_id is not None,
                    edge_id=edge_id,
                    noisy=spec.noisy,
                )
            self.step += 1

        for anc in x_ancs:
            self._emit(kind="h", qubits=(anc,), noisy=spec.noisy)
        self.step += 1
        for anc in ancillas:
            key = ("p", anc, self.round_counter)
            self._emit(kind="measure", qubits=(anc,), basis="Z", noisy=spec.noisy, tag=key)
            self.sched.plaquettes.append(
                PlaquetteRecord(
                    anc=anc,
                    seg_idx=seg_idx,
                    round_idx=self.round_counter,
                    kind="X" if lay.kind(anc) is QubitKind.ANC_X else "Z",
                    support=frozenset(supports[anc].values()),
                    key=key,
                )
            )
        self.step += 1
        self.round_counter += 1


def window_schedule(
    layout: NetworkLayout,
    segments: list[SegmentSpec],
    scheduled: list[tuple[int, int]] | None = None,
    passive: list[tuple[int, int]] | None = None,
) -> GateSchedule:
    """Schedule an arbitrary sequence of segments over a module region."""
    b = _Builder(layout, scheduled, passive)
    for i, spec in enumerate(segments):
        b.segment(spec, i)
    b.sched.segments = list(segments)
    b.sched.metadata = {
        "scheduled": sorted(b.scheduled),
        "passive": sorted(b.passive),
        "rounds_total": b.round_counter,
    }
    return b.sched


def physical_stabiliser_round(
    layout: NetworkLayout,
    active_modules: list[tuple[int, int]],
    seg_kind: str = "Q",
) -> GateSchedule:
    """One full round of physical stabiliser measurements over a region.

    CNOTs crossing module boundaries are marked distributed.
    """
    return window_schedule(layout, [SegmentSpec(seg_kind, 1)], scheduled=active_modules)


def module_stabiliser_protocol(
    layout: NetworkLayout, params: ProtocolParams
) -> GateSchedule:
    """The repeating module-qubit stabiliser super-round.

    Each super-round interleaves the X-module merge, a Q-only stretch, the
    Z-module merge and another Q-only stretch, each lasting ``n`` physical
    rounds, so half of the ``4n`` rounds consume inter-module entanglement.
    """
    if not layout.spec.is_hierarchical:
        raise ProtocolError(
            "module-qubit stabiliser protocol needs hierarchical modules "
            "(D >= 5); simple modules run the flat schedule"
        )
    segments = []
    for _ in range(params.L_rounds):
        segments.extend(
            [
                SegmentSpec("X", params.n),
                SegmentSpec("Q", params.n),
                SegmentSpec("Z", params.n),
                SegmentSpec("Q", params.n),
            ]
        )
    sched = window_schedule(layout, segments)
    sched.metadata.update({"n": params.n, "L_rounds": params.L_rounds})
    return sched


def flat_protocol(layout: NetworkLayout, rounds: int, noisy: bool = True) -> GateSchedule:
    """Continuous full-lattice stabiliser rounds (single-tier decoding)."""
    return window_schedule(layout, [SegmentSpec("F", rounds, noisy=noisy)])


def distributed_cnot(
    control: int, target: int, pair: tuple[int, int], noisy: bool = True, step: int = 0
) -> list[GateEvent]:
    """Lowered teleported-CNOT gadget consuming one entangled pair.

    Emits the pair preparation, the two local CNOTs, the Z- and X-basis
    measurements of the pair halves, and byproduct corrections which are
    applied to the Pauli frame immediately (no feed-forward latency).
    """
    ea, eb = pair
    return [
        GateEvent(step=step + 0, kind="epr", qubits=(ea, eb), noisy=noisy),
        GateEvent(step=step + 1, kind="cnot", qubits=(control, ea), noisy=noisy),
        GateEvent(
            step=step + 2,
            kind="measure",
            qubits=(ea,),
            basis="Z",
            noisy=noisy,
            forward=("X", eb),
        ),
        GateEvent(step=step + 3, kind="cnot", qubits=(eb, target), noisy=noisy),
        GateEvent(step=step + 4, kind="h", qubits=(eb,), noisy=noisy),
        GateEvent(
            step=step + 5,
            kind="measure",
            qubits=(eb,),
            basis="Z",
            noisy=noisy,
            forward=("Z", control),
        ),
    ]


def module_stabiliser_outcome(
    bits: dict[int, int], layout: NetworkLayout, module: tuple[int, int]
) -> int:
    """Combine one round of an X/Z module's plaquette outcomes into the
    module-qubit stabiliser value (+1/-1).

    ``bits`` maps ancilla id to its 0/1 outcome for the round being read.
    """
    parity = 0
    for anc in layout.module_stab_ancillas(module):
        if anc not in bits:
            raise KeyError(f"record incomplete: ancilla {anc} missing")
        parity ^= bits[anc] & 1
    return -1 if parity else 1
