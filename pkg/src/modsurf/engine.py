"""Circuit-level Pauli-frame fault engine.

Lowers a :class:`~modsurf.circuits.GateSchedule` (expanding distributed
CNOTs into their teleportation gadgets), derives detectors from plaquette
measurement timelines, enumerates elementary fault classes with their
detector/observable footprints, and samples trial batches with exact
per-location categorical noise draws.

Everything is relative to the ideal reference run: measurement values are
deviations, so a noiseless trial produces all-zero detectors.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .circuits import GateSchedule
from .pauli import EntanglementChannel, IntraModuleNoise
from .topology import NetworkLayout, QubitKind

OP_INIT, OP_H, OP_CNOT, OP_MEAS, OP_EPR = range(5)

_FWD_NONE, _FWD_X, _FWD_Z = 0, 1, 2

#: (x, z) masks of the 15 two-qubit Pauli outcomes, aligned with
#: pauli.TWO_QUBIT_PAULIS ordering.
_MASKS1 = ((1, 0), (1, 1), (0, 1))
_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_MASKS2 = []
for _a in ("I", "X", "Y", "Z"):
    for _b in ("I", "X", "Y", "Z"):
        if (_a, _b) != ("I", "I"):
            _MASKS2.append((_PAULI_BITS[_a], _PAULI_BITS[_b]))


@dataclass(frozen=True)
class ObsSpec:
    """An observable: XOR of measurement deviations and frame bits.

    With ``frame_at_end`` false, the frame parity is evaluated just after
    the latest measurement in ``mid_keys`` instead of at the window end, so
    later faults do not leak into the comparison.
    """

    name: str
    problem: str  # "phase" | "bit"
    mid_keys: tuple = ()  # plaquette measurement keys
    frame: tuple = ()  # ((qubit, "x"|"z"), ...)
    frame_at_end: bool = True


@dataclass(frozen=True)
class Detector:
    """Parity of measurement deviations that is zero in a noiseless run."""

    index: int
    problem: str
    mids: tuple
    anc: int
    round_idx: int


@dataclass(frozen=True)
class Rates:
    noise: IntraModuleNoise
    channel: EntanglementChannel

    def value(self, param: str) -> float:
        return {
            "init": self.noise.eps_init,
            "meas": self.noise.eps_meas,
            "1q": self.noise.eps_1q,
            "2q": self.noise.eps_2q,
            "px": self.channel.p_x,
            "py": self.channel.p_y,
            "pz": self.channel.p_z,
        }[param]


class CompiledWindow:
    """Schedule lowered to ops, with rate-independent fault footprints."""

    def __init__(
        self,
        layout: NetworkLayout,
        sched: GateSchedule,
        observables: list[ObsSpec],
        decode_modules: list[tuple[int, int]] | None = None,
    ):
        self.layout = layout
        self.sched = sched
        self.observables = list(observables)
        self.decode_modules = (
            None if decode_modules is None else set(decode_modules)
        )
        self._lower()
        self._build_detectors()
        self._enumerate_faults()

    # -- lowering ------------------------------------------------------------

    def _lower(self):
        lay = self.layout
        n_scratch_base = lay.n_qubits
        self.ops: list[tuple] = []
        self.mid_of_key: dict[tuple, int] = {}
        self.n_mids = 0
        # noise locations: (param, frac_kind, opidx, payload)
        self._locations: list[tuple] = []

        self.mid_op: list[int] = []

        def add_op(code, a, b=-1, mid=-1, fwd=_FWD_NONE, fwd_t=-1):
            self.ops.append((code, a, b, mid, fwd, fwd_t))
            return len(self.ops) - 1

        def new_mid(key):
            mid = self.n_mids
            self.n_mids += 1
            if key is not None:
                self.mid_of_key[key] = mid
            return mid

        for ev in self.sched.events:
            if ev.kind == "init":
                i = add_op(OP_INIT, ev.qubits[0])
                if ev.noisy:
                    self._locations.append(("init", i, (ev.qubits[0],)))
            elif ev.kind == "h":
                i = add_op(OP_H, ev.qubits[0])
                if ev.noisy:
                    self._locations.append(("depol1", i, (ev.qubits[0],)))
            elif ev.kind == "cnot" and not ev.distributed:
                i = add_op(OP_CNOT, ev.qubits[0], ev.qubits[1])
                if ev.noisy:
                    self._locations.append(("depol2", i, ev.qubits))
            elif ev.kind == "cnot" and ev.distributed:
                c, t = ev.qubits
                ea = n_scratch_base + 2 * ev.edge_id
                eb = ea + 1
                i = add_op(OP_EPR, ea, eb)
                if ev.noisy:
                    self._locations.append(("channel", i, (eb,)))
                i = add_op(OP_CNOT, c, ea)
                if ev.noisy:
                    self._locations.append(("depol2", i, (c, ea)))
                i = add_op(OP_MEAS, ea, fwd=_FWD_X, fwd_t=eb)
                if ev.noisy:
                    self._locations.append(("measfwd", i, ()))
                i = add_op(OP_CNOT, eb, t)
                if ev.noisy:
                    self._locations.append(("depol2", i, (eb, t)))
                i = add_op(OP_H, eb)
                if ev.noisy:
                    self._locations.append(("depol1", i, (eb,)))
                i = add_op(OP_MEAS, eb, fwd=_FWD_Z, fwd_t=c)
                if ev.noisy:
                    self._locations.append(("measfwd", i, ()))
            elif ev.kind == "measure":
                mid = new_mid(ev.tag)
                i = add_op(OP_MEAS, ev.qubits[0], mid=mid)
                self.mid_op.append(i)
                if ev.noisy:
                    self._locations.append(("meas", i, (mid,)))
            elif ev.kind == "epr":
                i = add_op(OP_EPR, ev.qubits[0], ev.qubits[1])
                if ev.noisy:
                    self._locations.append(("channel", i, (ev.qubits[1],)))
            else:
                raise ValueError(f"unknown event kind {ev.kind!r}")

        n_total = n_scratch_base + 2 * len(self.layout.distributed_edges())
        self.qubit_ops: list[list[int]] = [[] for _ in range(n_total)]
        for i, op in enumerate(self.ops):
            code, a, b = op[0], op[1], op[2]
            self.qubit_ops[a].append(i)
            if code in (OP_CNOT, OP_EPR):
                self.qubit_ops[b].append(i)

    # -- detectors -------------------------------------------------------------

    def _build_detectors(self):
        sched = self.sched
        lay = self.layout
        init_basis = {(r.qubit, r.seg_idx): r.basis for r in sched.inits}
        readout = {(r.qubit, r.seg_idx): (r.basis, r.key) for r in sched.readouts}
        init_segs: dict[int, list[int]] = {}
        for r in sched.inits:
            init_segs.setdefault(r.qubit, []).append(r.seg_idx)

        by_anc: dict[int, list] = {}
        for p in sched.plaquettes:
            by_anc.setdefault(p.anc, []).append(p)

        self.detectors: list[Detector] = []

        def decoded(anc: int) -> bool:
            if self.decode_modules is None:
                return True
            return lay.split(anc)[0] in self.decode_modules

        def reinitialised(q: int, after_seg: int, upto_seg: int) -> bool:
            return any(after_seg < s <= upto_seg for s in init_segs.get(q, ()))

        def add(problem, mid_keys, anc, round_idx):
            mids = tuple(self.mid_of_key[k] for k in mid_keys)
            self.detectors.append(
                Detector(len(self.detectors), problem, mids, anc, round_idx)
            )

        for anc, entries in sorted(by_anc.items()):
            if not decoded(anc):
                continue
            entries.sort(key=lambda e: e.round_idx)
            problem = "phase" if entries[0].kind == "X" else "bit"
            basis = entries[0].kind  # compatible data basis
            first = entries[0]
            if first.support and all(
                init_basis.get((q, first.seg_idx)) == basis for q in first.support
            ):
                add(problem, [first.key], anc, first.round_idx)
            for prev, cur in zip(entries, entries[1:]):
                extra = []
                ok = True
                for q in cur.support - prev.support:
                    if init_basis.get((q, cur.seg_idx)) != basis:
                        ok = False
                        break
                if ok:
                    # Persisting qubits must not have been reset in between.
                    for q in cur.support & prev.support:
                        if reinitialised(q, prev.seg_idx, cur.seg_idx):
                            ok = False
                            break
                if ok:
                    for q in prev.support - cur.support:
                        got = readout.get((q, prev.seg_idx))
                        if got is None or got[0] != basis:
                            ok = False
                            break
                        extra.append(got[1])
                if ok:
                    add(problem, [prev.key, cur.key] + extra, anc, cur.round_idx)
                # else: reference reset; chains terminate openly here
            last = entries[-1]
            closure = []
            ok = bool(last.support)
            for q in last.support:
                got = readout.get((q, last.seg_idx))
                if got is None or got[0] != basis:
                    ok = False
                    break
                closure.append(got[1])
            if ok:
                add(problem, [last.key] + closure, anc, last.round_idx + 1)

        # incidence: mid -> detectors containing it
        self._mid_dets: dict[int, list[int]] = {}
        for det in self.detectors:
            for m in det.mids:
                self._mid_dets.setdefault(m, []).append(det.index)

        # observables: mid incidence, frame incidence per evaluation time
        self._mid_obs: dict[int, list[int]] = {}
        self._obs_cutoff: list[int | None] = []
        for oi, obs in enumerate(self.observables):
            for key in obs.mid_keys:
                self._mid_obs.setdefault(self.mid_of_key[key], []).append(oi)
            if obs.frame_at_end or not obs.mid_keys:
                self._obs_cutoff.append(None)
            else:
                self._obs_cutoff.append(
                    max(self.mid_op[self.mid_of_key[k]] for k in obs.mid_keys)
                )
        self._cutoffs = sorted({c for c in self._obs_cutoff if c is not None})
        self._frame_obs_by_cut: dict[int | None, dict[tuple[int, str], list[int]]] = {}
        for oi, obs in enumerate(self.observables):
            table = self._frame_obs_by_cut.setdefault(self._obs_cutoff[oi], {})
            for q, comp in obs.frame:
                table.setdefault((q, comp), []).append(oi)

    # -- propagation ----------------------------------------------------------

    def _propagate(self, start: int, masks: dict[int, tuple[int, int]]):
        """Push Pauli masks injected after op ``start`` through the circuit.

        Returns (flipped mids, end frame, frame snapshots at observable
        cutoff positions).
        """
        ops = self.ops
        qubit_ops = self.qubit_ops
        live: dict[int, list] = {}
        heap: list[tuple[int, int]] = []
        flips: set[int] = set()
        applied: set[int] = set()
        cutoffs = self._cutoffs
        snaps: dict[int, dict] = {}
        ci = 0
        while ci < len(cutoffs) and cutoffs[ci] <= start:
            snaps[cutoffs[ci]] = {}
            ci += 1

        def activate(q, x, z, after):
            cur = live.get(q)
            if cur is None:
                if not (x or z):
                    return
                live[q] = [x, z]
            else:
                cur[0] ^= x
                cur[1] ^= z
                if not (cur[0] or cur[1]):
                    del live[q]
                    return
            qops = qubit_ops[q]
            idx = bisect_right(qops, after)
            if idx < len(qops):
                heapq.heappush(heap, (qops[idx], q))

        for q, (x, z) in masks.items():
            activate(q, x, z, start)

        while heap:
            i, q = heapq.heappop(heap)
            while ci < len(cutoffs) and cutoffs[ci] < i:
                snaps[cutoffs[ci]] = {k: (v[0], v[1]) for k, v in live.items()}
                ci += 1
            if i in applied or q not in live:
                continue
            applied.add(i)
            code, a, b, mid, fwd, fwd_t = ops[i]
            if code == OP_INIT:
                live.pop(a, None)
            elif code == OP_H:
                st = live.get(a)
                if st is not None:
                    st[0], st[1] = st[1], st[0]
                    self._repush(heap, a, i)
            elif code == OP_CNOT:
                sa = live.get(a, (0, 0))
                sb = live.get(b, (0, 0))
                xa, za = sa[0], sa[1]
                xb, zb = sb[0], sb[1]
                nxa, nza = xa, za ^ zb
                nxb, nzb = xb ^ xa, zb
                self._set(live, a, nxa, nza)
                self._set(live, b, nxb, nzb)
                if a in live:
                    self._repush(heap, a, i)
                if b in live:
                    self._repush(heap, b, i)
            elif code == OP_MEAS:
                st = live.pop(a, None)
                x_dev = st[0] if st else 0
                if x_dev:
                    if mid >= 0:
                        flips.symmetric_difference_update({mid})
                    if fwd == _FWD_X:
                        activate(fwd_t, 1, 0, i)
                    elif fwd == _FWD_Z:
                        activate(fwd_t, 0, 1, i)
            elif code == OP_EPR:
                live.pop(a, None)
                live.pop(b, None)

        end = {q: (st[0], st[1]) for q, st in live.items()}
        while ci < len(cutoffs):
            snaps[cutoffs[ci]] = end
            ci += 1
        return flips, end, snaps

    @staticmethod
    def _set(live, q, x, z):
        if x or z:
            live[q] = [x, z]
        else:
            live.pop(q, None)

    def _repush(self, heap, q, after):
        qops = self.qubit_ops[q]
        idx = bisect_right(qops, after)
        if idx < len(qops):
            heapq.heappush(heap, (qops[idx], q))

    # -- fault enumeration ------------------------------------------------------

    def _footprint(self, mid_flips, end_frame, snaps):
        dets: set[int] = set()
        obs = 0
        for m in mid_flips:
            for d in self._mid_dets.get(m, ()):
                dets.symmetric_difference_update({d})
            for oi in self._mid_obs.get(m, ()):
                obs ^= 1 << oi
        for cut, table in self._frame_obs_by_cut.items():
            frame = end_frame if cut is None else snaps.get(cut, end_frame)
            for q, (x, z) in frame.items():
                if x:
                    for oi in table.get((q, "x"), ()):
                        obs ^= 1 << oi
                if z:
                    for oi in table.get((q, "z"), ()):
                        obs ^= 1 << oi
        return tuple(sorted(dets)), obs

    def _enumerate_faults(self):
        # per location: list of outcomes [(param, frac, dets, obs)]
        self.locations: list[list[tuple]] = []
        for (kind, opidx, payload) in self._locations:
            outcomes = []

            def run(param, frac, masks):
                flips, frame, snaps = self._propagate(opidx, masks)
                outcomes.append((param, frac) + self._footprint(flips, frame, snaps))

            if kind == "init":
                run("init", 1.0, {payload[0]: (1, 0)})
            elif kind == "depol1":
                for m in _MASKS1:
                    run("1q", 1 / 3, {payload[0]: m})
            elif kind == "depol2":
                q1, q2 = payload
                for m1, m2 in _MASKS2:
                    masks = {}
                    if m1 != (0, 0):
                        masks[q1] = m1
                    if m2 != (0, 0):
                        masks[q2] = m2
                    run("2q", 1 / 15, masks)
            elif kind == "channel":
                for param, m in (("px", (1, 0)), ("py", (1, 1)), ("pz", (0, 1))):
                    run(param, 1.0, {payload[0]: m})
            elif kind == "meas":
                mid = payload[0]
                outcomes.append(("meas", 1.0) + self._footprint({mid}, {}, {}))
            elif kind == "measfwd":
                op = self.ops[opidx]
                fwd, fwd_t = op[4], op[5]
                mask = (1, 0) if fwd == _FWD_X else (0, 1)
                run("meas", 1.0, {fwd_t: mask})
            else:
                raise AssertionError(kind)
            self.locations.append(outcomes)

        # problem-local detector indexing
        self.problem_dets = {
            "phase": [d.index for d in self.detectors if d.problem == "phase"],
            "bit": [d.index for d in self.detectors if d.problem == "bit"],
        }
        self._det_local = {}
        for prob, ids in self.problem_dets.items():
            for li, gi in enumerate(ids):
                self._det_local[(prob, gi)] = li
        self.problem_obs = {
            "phase": [i for i, o in enumerate(self.observables) if o.problem == "phase"],
            "bit": [i for i, o in enumerate(self.observables) if o.problem == "bit"],
        }

    # -- per-rate views -----------------------------------------------------------

    def fault_lists(self, rates: Rates) -> dict[str, list[tuple[float, tuple, int]]]:
        """Per-problem fault classes (prob, local det ids, local obs mask)."""
        out = {"phase": [], "bit": []}
        det_problem = {d.index: d.problem for d in self.detectors}
        for outcomes in self.locations:
            for (param, frac, dets, obs) in outcomes:
                p = rates.value(param) * frac
                if p <= 0.0:
                    continue
                for prob_name in ("phase", "bit"):
                    local = tuple(
                        self._det_local[(prob_name, d)]
                        for d in dets
                        if det_problem[d] == prob_name
                    )
                    obs_local = 0
                    for bit, oi in enumerate(self.problem_obs[prob_name]):
                        if obs >> oi & 1:
                            obs_local |= 1 << bit
                    if local or obs_local:
                        out[prob_name].append((p, local, obs_local))
        return out

    def sampler(self, rates: Rates) -> "WindowSampler":
        return WindowSampler(self, rates)


class WindowSampler:
    """Exact categorical sampling of all noise locations for trial batches."""

    def __init__(self, compiled: CompiledWindow, rates: Rates):
        self.compiled = compiled
        n_loc = len(compiled.locations)
        self._cums = []
        self._effects = []
        for outcomes in compiled.locations:
            probs = np.array([rates.value(p) * f for (p, f, _, _) in outcomes])
            cum = np.cumsum(probs)
            self._cums.append(cum)
            self._effects.append([(dets, obs) for (_, _, dets, obs) in outcomes])
        self._totals = np.array([c[-1] if len(c) else 0.0 for c in self._cums])
        self.n_det = len(compiled.detectors)
        self.n_obs = len(compiled.observables)

    def sample(self, rng: np.random.Generator, batch: int):
        """Returns det flips (batch, n_det) and observable flips (batch, n_obs)."""
        det = np.zeros((batch, self.n_det), dtype=bool)
        obs = np.zeros((batch, self.n_obs), dtype=bool)
        n_loc = len(self._cums)
        if n_loc == 0:
            return det, obs
        u = rng.random((n_loc, batch))
        fired = u < self._totals[:, None]
        locs, trials = np.nonzero(fired)
        for loc, t in zip(locs.tolist(), trials.tolist()):
            k = int(np.searchsorted(self._cums[loc], u[loc, t], side="right"))
            dets, ob = self._effects[loc][k]
            for d in dets:
                det[t, d] ^= True
            oi = 0
            while ob:
                if ob & 1:
                    obs[t, oi] ^= True
                ob >>= 1
                oi += 1
        return det, obs


def reference_trial(
    compiled: CompiledWindow, rates: Rates, rng: np.random.Generator
):
    """Independent slow-path simulation of one trial (oracle for tests).

    Propagates a dense Pauli frame op by op with freshly sampled noise,
    returning (detector bits, observable bits) like one sampler row.
    """
    from .pauli import PauliFrame

    lay = compiled.layout
    n_total = lay.n_qubits + 2 * len(lay.distributed_edges())
    frame = PauliFrame(n_total)
    mid_dev = np.zeros(compiled.n_mids, dtype=bool)

    noise_at: dict[int, list] = {}
    for (kind, opidx, payload) in compiled._locations:
        noise_at.setdefault(opidx, []).append((kind, payload))

    snaps: dict[int, tuple] = {}
    cutoffs = sorted(set(compiled._cutoffs))
    ci = 0

    for i, (code, a, b, mid, fwd, fwd_t) in enumerate(compiled.ops):
        while ci < len(cutoffs) and cutoffs[ci] < i:
            snaps[cutoffs[ci]] = (frame.x.copy(), frame.z.copy())
            ci += 1
        if code == OP_INIT:
            frame.reset(a)
        elif code == OP_H:
            frame.apply_h(a)
        elif code == OP_CNOT:
            frame.apply_cnot(a, b)
        elif code == OP_EPR:
            frame.reset(a)
            frame.reset(b)
        elif code == OP_MEAS:
            dev = bool(frame.x[a])
            frame.reset(a)
            for (kind, payload) in noise_at.get(i, ()):
                if kind in ("meas", "measfwd") and rng.random() < rates.noise.eps_meas:
                    dev ^= True
            if mid >= 0:
                mid_dev[mid] = dev
            if dev and fwd == _FWD_X:
                frame.x[fwd_t] ^= True
            elif dev and fwd == _FWD_Z:
                frame.z[fwd_t] ^= True
        for (kind, payload) in noise_at.get(i, ()):
            if kind == "init":
                if rng.random() < rates.noise.eps_init:
                    frame.x[payload[0]] ^= True
            elif kind == "depol1":
                if rng.random() < rates.noise.eps_1q:
                    x, z = _MASKS1[rng.integers(3)]
                    frame.x[payload[0]] ^= bool(x)
                    frame.z[payload[0]] ^= bool(z)
            elif kind == "depol2":
                if rng.random() < rates.noise.eps_2q:
                    (x1, z1), (x2, z2) = _MASKS2[rng.integers(15)]
                    q1, q2 = payload
                    frame.x[q1] ^= bool(x1)
                    frame.z[q1] ^= bool(z1)
                    frame.x[q2] ^= bool(x2)
                    frame.z[q2] ^= bool(z2)
            elif kind == "channel":
                ch = rates.channel
                un = rng.random()
                if un < ch.p_x:
                    frame.x[payload[0]] ^= True
                elif un < ch.p_x + ch.p_y:
                    frame.x[payload[0]] ^= True
                    frame.z[payload[0]] ^= True
                elif un < ch.p_x + ch.p_y + ch.p_z:
                    frame.z[payload[0]] ^= True

    det = np.zeros(len(compiled.detectors), dtype=bool)
    for d in compiled.detectors:
        v = False
        for m in d.mids:
            v ^= bool(mid_dev[m])
        det[d.index] = v
    obs = np.zeros(len(compiled.observables), dtype=bool)
    for oi, o in enumerate(compiled.observables):
        v = False
        for key in o.mid_keys:
            v ^= bool(mid_dev[compiled.mid_of_key[key]])
        for q, comp in o.frame:
            v ^= bool(frame.x[q] if comp == "x" else frame.z[q])
        obs[oi] = v
    return det, obs


# -- observable builders -------------------------------------------------------


def module_product_observable(
    layout: NetworkLayout, sched: GateSchedule, module: tuple[int, int], seg_idx: int
) -> ObsSpec:
    """Module-level stabiliser outcome error for one merge segment.

    XORs the module's own-type plaquette deviations at the segment's last
    round with the true value change accumulated on the stabiliser support,
    so a set value of 1 means the (corrected) reported outcome is wrong.
    """
    from .topology import ModuleRole

    role = layout.module_role(module)
    ancs = layout.module_stab_ancillas(module)
    rounds = [
        p.round_idx
        for p in sched.plaquettes
        if p.anc in ancs and p.seg_idx == seg_idx
    ]
    if not rounds:
        raise ValueError(f"module {module} has no merge rounds in segment {seg_idx}")
    last = max(rounds)
    keys = [("p", anc, last) for anc in sorted(ancs)]
    comp = "z" if role is ModuleRole.X else "x"
    frame = tuple((q, comp) for q in sorted(layout.module_stab_support(module)))
    problem = "phase" if role is ModuleRole.X else "bit"
    return ObsSpec(
        name=f"product:{module}:{seg_idx}",
        problem=problem,
        mid_keys=tuple(keys),
        frame=frame,
    )


def patch_logical_observables(
    layout: NetworkLayout, module: tuple[int, int]
) -> list[ObsSpec]:
    """Frame parities flagging logical X/Z flips of one Q-module patch."""
    phase = ObsSpec(
        name=f"patchZ:{module}",
        problem="phase",
        frame=tuple((q, "z") for q in layout.logical_x_support(module)),
    )
    bit = ObsSpec(
        name=f"patchX:{module}",
        problem="bit",
        frame=tuple((q, "x") for q in layout.logical_z_support(module)),
    )
    return [phase, bit]
