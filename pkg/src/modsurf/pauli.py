"""Pauli algebra, error frames, and stochastic error channels.

Everything here works at the Pauli-frame level: a state is never stored,
only the X/Z error bits accumulated on each qubit relative to an ideal
reference run.  Phases are discarded throughout; Y is treated as X*Z.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Pauli(Enum):
    """Single-qubit Pauli operator, phase-free."""

    I = (0, 0)
    X = (1, 0)
    Y = (1, 1)
    Z = (0, 1)

    @property
    def x(self) -> int:
        return self.value[0]

    @property
    def z(self) -> int:
        return self.value[1]

    def __mul__(self, other: "Pauli") -> "Pauli":
        return _FROM_BITS[(self.x ^ other.x, self.z ^ other.z)]

    def commutes_with(self, other: "Pauli") -> bool:
        return (self.x * other.z + self.z * other.x) % 2 == 0


_FROM_BITS = {(p.x, p.z): p for p in Pauli}


def pauli_from_bits(x: int, z: int) -> Pauli:
    return _FROM_BITS[(x & 1, z & 1)]


#: The 15 non-identity two-qubit Paulis, in a fixed order.
TWO_QUBIT_PAULIS: list[tuple[Pauli, Pauli]] = [
    (a, b) for a in Pauli for b in Pauli if not (a is Pauli.I and b is Pauli.I)
]

ONE_QUBIT_PAULIS: list[Pauli] = [Pauli.X, Pauli.Y, Pauli.Z]


class PauliFrame:
    """X/Z error bits for ``n`` qubits, mutated in place by Clifford rules.

    A frame is confined to a single Monte Carlo trial; trials never share
    frames.
    """

    __slots__ = ("x", "z")

    def __init__(self, n: int):
        self.x = np.zeros(n, dtype=bool)
        self.z = np.zeros(n, dtype=bool)

    def __len__(self) -> int:
        return len(self.x)

    def copy(self) -> "PauliFrame":
        out = PauliFrame(0)
        out.x = self.x.copy()
        out.z = self.z.copy()
        return out

    def apply(self, p: Pauli, q: int) -> None:
        self.x[q] ^= bool(p.x)
        self.z[q] ^= bool(p.z)

    def pauli_on(self, q: int) -> Pauli:
        return pauli_from_bits(int(self.x[q]), int(self.z[q]))

    def apply_h(self, q: int) -> None:
        self.x[q], self.z[q] = self.z[q], self.x[q]

    def apply_cnot(self, control: int, target: int) -> None:
        # X copies control -> target, Z copies target -> control.
        self.x[target] ^= self.x[control]
        self.z[control] ^= self.z[target]

    def reset(self, q: int) -> None:
        self.x[q] = False
        self.z[q] = False

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())


def propagate_through_clifford(frame: PauliFrame, gate: tuple) -> PauliFrame:
    """Propagate a frame through one Clifford gate.

    ``gate`` is ``("H", q)`` or ``("CNOT", control, target)``.  The frame is
    updated in place and returned.  Invalid qubit ids raise ``IndexError``.
    """
    kind = gate[0].upper()
    n = len(frame)
    for q in gate[1:]:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} outside frame of {n} qubits")
    if kind == "H":
        frame.apply_h(gate[1])
    elif kind == "CNOT":
        frame.apply_cnot(gate[1], gate[2])
    else:
        raise ValueError(f"unsupported gate kind {gate[0]!r}")
    return frame


@dataclass(frozen=True)
class EntanglementChannel:
    """Pauli error channel acting on one half of a raw or purified pair.

    With probability ``1 - p_x - p_y - p_z`` (the fidelity) the pair is left
    untouched, otherwise the corresponding Pauli lands on the designated
    half.  One-sided placement is frame-equivalent to any two-sided split
    with the same marginals.
    """

    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        for name in ("p_x", "p_y", "p_z"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.p_x + self.p_y + self.p_z > 1.0 + 1e-12:
            raise ValueError("error probabilities sum beyond 1")

    @property
    def fidelity(self) -> float:
        return 1.0 - self.p_x - self.p_y - self.p_z

    @property
    def bit_error_rate(self) -> float:
        """Probability of an X component (X or Y)."""
        return self.p_x + self.p_y

    @property
    def phase_error_rate(self) -> float:
        """Probability of a Z component (Z or Y)."""
        return self.p_z + self.p_y

    def probs(self) -> np.ndarray:
        """Probabilities ordered (I, X, Y, Z)."""
        return np.array([self.fidelity, self.p_x, self.p_y, self.p_z])

    @staticmethod
    def unpolarised(error_rate: float) -> "EntanglementChannel":
        """Channel with ``1 - F = error_rate`` split evenly over X, Y, Z."""
        p = error_rate / 3.0
        return EntanglementChannel(p, p, p)

    @staticmethod
    def noiseless() -> "EntanglementChannel":
        return EntanglementChannel(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class IntraModuleNoise:
    """Error rates of operations local to a module."""

    eps_init: float
    eps_meas: float
    eps_1q: float
    eps_2q: float

    def __post_init__(self):
        for name in ("eps_init", "eps_meas", "eps_1q", "eps_2q"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")

    @staticmethod
    def uniform(eps: float) -> "IntraModuleNoise":
        return IntraModuleNoise(eps, eps, eps, eps)

    @staticmethod
    def noiseless() -> "IntraModuleNoise":
        return IntraModuleNoise(0.0, 0.0, 0.0, 0.0)


_PAULI_ORDER = [Pauli.I, Pauli.X, Pauli.Y, Pauli.Z]


def sample_entanglement_error(ch: EntanglementChannel, rng: np.random.Generator) -> Pauli:
    """Draw the Pauli applied to the designated half of one pair."""
    u = rng.random()
    if u < ch.p_x:
        return Pauli.X
    if u < ch.p_x + ch.p_y:
        return Pauli.Y
    if u < ch.p_x + ch.p_y + ch.p_z:
        return Pauli.Z
    return Pauli.I


def sample_depolarizing(arity: int, rate: float, rng: np.random.Generator) -> tuple[Pauli, Pauli]:
    """Depolarizing noise after a 1- or 2-qubit gate.

    With probability ``rate`` a uniformly random non-identity Pauli (3 cases
    for arity 1, 15 for arity 2) is returned; the second slot is I for
    arity 1.
    """
    if arity not in (1, 2):
        raise ValueError("arity must be 1 or 2")
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate={rate} outside [0, 1]")
    if rng.random() >= rate:
        return (Pauli.I, Pauli.I)
    if arity == 1:
        return (ONE_QUBIT_PAULIS[rng.integers(3)], Pauli.I)
    return TWO_QUBIT_PAULIS[rng.integers(15)]
