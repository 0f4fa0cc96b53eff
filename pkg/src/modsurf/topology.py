"""Module-network geometry: lattices, roles, perimeters, distributed edges.

The network is a ``side x side`` grid of modules (``side = 2L - 1``), each
holding a ``D x D`` client-qubit array.  Client arrays tile a single global
square lattice: sites with even coordinate parity are data qubits, sites at
(odd row, even col) are X ancillas and (even row, odd col) are Z ancillas.
Module roles follow the same pattern one level up, so Q modules sit where
data qubits would and X/Z modules where the ancillas would.

Broker units are bookkeeping only: they contribute qubit counts and serve
distributed edges, but never join the code lattice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum


class ConfigurationError(ValueError):
    """Raised for module/lattice parameter combinations we cannot build."""


class ModuleRole(Enum):
    Q = "Q"
    X = "X"
    Z = "Z"


class QubitKind(Enum):
    DATA = "data"
    ANC_X = "ancX"
    ANC_Z = "ancZ"


#: Direction names, with their (row, col) steps.
DIRECTIONS = {"N": (-1, 0), "S": (1, 0), "W": (0, -1), "E": (0, 1)}


@dataclass(frozen=True)
class PerimeterClass:
    """Placement of a client qubit within its module."""

    kind: str  # "interior" | "edge" | "corner"
    directions: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModuleSpec:
    """Client-array dimension and broker provisioning of one module.

    ``dim_d == 1`` gives a simple module (one client qubit, one or four
    brokers); odd ``dim_d >= 5`` gives a hierarchical module with ``4 * D``
    brokers on the perimeter.  Each broker holds ``purification_tiers + 1``
    qubits.
    """

    dim_d: int
    purification_tiers: int = 0
    brokers_per_module: int | None = None

    def __post_init__(self):
        d = self.dim_d
        if d < 1 or d % 2 == 0 or d == 3:
            raise ConfigurationError(
                f"module dimension {d} unsupported: need D = 1 or odd D >= 5"
            )
        if self.purification_tiers < 0:
            raise ConfigurationError("purification_tiers must be >= 0")
        if self.brokers_per_module is None:
            object.__setattr__(
                self, "brokers_per_module", 1 if d == 1 else 4 * d
            )
        if d == 1 and self.brokers_per_module not in (1, 4):
            raise ConfigurationError("simple modules take 1 or 4 brokers")

    @property
    def is_hierarchical(self) -> bool:
        return self.dim_d >= 5

    @property
    def module_size(self) -> int:
        """Total qubits per module: client array plus broker ladders."""
        return self.dim_d**2 + self.brokers_per_module * (self.purification_tiers + 1)


@dataclass(frozen=True)
class DistributedEdge:
    """Nearest-neighbour lattice edge whose endpoints sit in different modules."""

    qubit_a: int
    qubit_b: int
    module_a: tuple[int, int]
    module_b: tuple[int, int]
    broker_a: tuple[tuple[int, int], str, int]
    broker_b: tuple[tuple[int, int], str, int]


_OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}


class NetworkLayout:
    """Immutable description of the module grid and its client lattice."""

    def __init__(self, spec: ModuleSpec, L: int):
        # Any L >= 1 builds a grid; logical-qubit experiments require odd
        # L >= 3, enforced where experiments are configured.
        if L < 1:
            raise ConfigurationError("L must be >= 1")
        self.spec = spec
        self.L = L
        self.side = 2 * L - 1
        self.D = spec.dim_d
        self.extent = self.side * self.D
        self.n_qubits = self.extent**2
        self._edges: list[DistributedEdge] | None = None

    # -- indexing ----------------------------------------------------------

    def gid(self, module: tuple[int, int], local: tuple[int, int]) -> int:
        (I, J), (r, c) = module, local
        D = self.D
        if not (0 <= I < self.side and 0 <= J < self.side):
            raise IndexError(f"module {module} outside {self.side}x{self.side} grid")
        if not (0 <= r < D and 0 <= c < D):
            raise IndexError(f"local coords {local} outside {D}x{D} array")
        return ((I * self.side + J) * D + r) * D + c

    def split(self, gid: int) -> tuple[tuple[int, int], tuple[int, int]]:
        D = self.D
        m, rest = divmod(gid, D * D)
        I, J = divmod(m, self.side)
        r, c = divmod(rest, D)
        return (I, J), (r, c)

    def global_coords(self, gid: int) -> tuple[int, int]:
        (I, J), (r, c) = self.split(gid)
        return (I * self.D + r, J * self.D + c)

    def gid_at(self, row: int, col: int) -> int:
        D = self.D
        return self.gid((row // D, col // D), (row % D, col % D))

    def in_lattice(self, row: int, col: int) -> bool:
        return 0 <= row < self.extent and 0 <= col < self.extent

    # -- roles -------------------------------------------------------------

    @staticmethod
    def _site_kind(row: int, col: int) -> QubitKind:
        if (row + col) % 2 == 0:
            return QubitKind.DATA
        return QubitKind.ANC_X if row % 2 == 1 else QubitKind.ANC_Z

    def kind(self, gid: int) -> QubitKind:
        return self._site_kind(*self.global_coords(gid))

    def module_role(self, module: tuple[int, int]) -> ModuleRole:
        I, J = module
        if (I + J) % 2 == 0:
            return ModuleRole.Q
        return ModuleRole.X if I % 2 == 1 else ModuleRole.Z

    def modules(self) -> list[tuple[int, int]]:
        return [(I, J) for I in range(self.side) for J in range(self.side)]

    def modules_with_role(self, role: ModuleRole) -> list[tuple[int, int]]:
        return [m for m in self.modules() if self.module_role(m) == role]

    def module_qubits(self, module: tuple[int, int]) -> list[int]:
        return [
            self.gid(module, (r, c)) for r in range(self.D) for c in range(self.D)
        ]

    def module_data(self, module: tuple[int, int]) -> list[int]:
        return [q for q in self.module_qubits(module) if self.kind(q) is QubitKind.DATA]

    def module_ancillas(self, module: tuple[int, int], kind: QubitKind) -> list[int]:
        return [q for q in self.module_qubits(module) if self.kind(q) is kind]

    # -- adjacency ---------------------------------------------------------

    def neighbor(self, gid: int, direction: str) -> int | None:
        dr, dc = DIRECTIONS[direction]
        row, col = self.global_coords(gid)
        row, col = row + dr, col + dc
        if not self.in_lattice(row, col):
            return None
        return self.gid_at(row, col)

    def plaquette(self, anc: int) -> dict[str, int]:
        """Data neighbours of an ancilla, keyed by direction."""
        if self.kind(anc) is QubitKind.DATA:
            raise ValueError(f"qubit {anc} is a data qubit, not an ancilla")
        out = {}
        for d in ("N", "W", "E", "S"):
            nb = self.neighbor(anc, d)
            if nb is not None:
                out[d] = nb
        return out

    # -- perimeter ---------------------------------------------------------

    def perimeter_class(self, gid: int) -> PerimeterClass:
        _, (r, c) = self.split(gid)
        D = self.D
        dirs = []
        if r == 0:
            dirs.append("N")
        if r == D - 1:
            dirs.append("S")
        if c == 0:
            dirs.append("W")
        if c == D - 1:
            dirs.append("E")
        if not dirs:
            return PerimeterClass("interior")
        if len(dirs) == 1:
            return PerimeterClass("edge", tuple(dirs))
        return PerimeterClass("corner", tuple(dirs))

    # -- distributed edges --------------------------------------------------

    def distributed_edges(self) -> list[DistributedEdge]:
        if self._edges is not None:
            return self._edges
        edges = []
        counters: dict[tuple[tuple[int, int], str], int] = {}
        for row in range(self.extent):
            for col in range(self.extent):
                a = self.gid_at(row, col)
                mod_a = self.split(a)[0]
                for direction in ("S", "E"):
                    dr, dc = DIRECTIONS[direction]
                    r2, c2 = row + dr, col + dc
                    if not self.in_lattice(r2, c2):
                        continue
                    b = self.gid_at(r2, c2)
                    mod_b = self.split(b)[0]
                    if mod_a == mod_b:
                        continue
                    ka = counters.setdefault((mod_a, direction), 0)
                    counters[(mod_a, direction)] = ka + 1
                    opp = _OPPOSITE[direction]
                    kb = counters.setdefault((mod_b, opp), 0)
                    counters[(mod_b, opp)] = kb + 1
                    edges.append(
                        DistributedEdge(
                            qubit_a=a,
                            qubit_b=b,
                            module_a=mod_a,
                            module_b=mod_b,
                            broker_a=(mod_a, direction, ka),
                            broker_b=(mod_b, opp, kb),
                        )
                    )
        self._edges = edges
        return edges

    # -- patch operators ----------------------------------------------------

    def logical_x_support(self, module: tuple[int, int]) -> list[int]:
        """Data qubits of one representative of the patch logical X."""
        return self._logical_support(module, "X")

    def logical_z_support(self, module: tuple[int, int]) -> list[int]:
        return self._logical_support(module, "Z")

    def _logical_support(self, module: tuple[int, int], which: str) -> list[int]:
        if self.module_role(module) is not ModuleRole.Q:
            raise ValueError(f"module {module} is not a Q module")
        I, J = module
        D = self.D
        # Even-parity Q modules carry logical X along the top row and
        # logical Z down the left column; odd-parity patches are transposed.
        horizontal = (which == "X") == (I % 2 == 0)
        if horizontal:
            return [self.gid(module, (0, c)) for c in range(0, D, 2)]
        return [self.gid(module, (r, 0)) for r in range(0, D, 2)]

    def module_stab_ancillas(self, module: tuple[int, int]) -> list[int]:
        """Own-type ancillas of an X/Z module; their plaquette product is the
        module-level stabiliser of the four neighbouring module qubits."""
        role = self.module_role(module)
        if role is ModuleRole.Q:
            raise ValueError(f"module {module} is a Q module")
        kind = QubitKind.ANC_X if role is ModuleRole.X else QubitKind.ANC_Z
        return self.module_ancillas(module, kind)

    def module_stab_support(self, module: tuple[int, int]) -> set[int]:
        """Data support of the module-level stabiliser (XOR of plaquettes)."""
        support: set[int] = set()
        for anc in self.module_stab_ancillas(module):
            for q in self.plaquette(anc).values():
                support.symmetric_difference_update({q})
        return support

    # -- serialization ------------------------------------------------------

    def dump(self) -> dict:
        qubits = []
        for gid in range(self.n_qubits):
            module, local = self.split(gid)
            peri = self.perimeter_class(gid)
            qubits.append(
                {
                    "id": gid,
                    "module": list(module),
                    "module_role": self.module_role(module).value,
                    "local": list(local),
                    "global": list(self.global_coords(gid)),
                    "kind": self.kind(gid).value,
                    "perimeter": peri.kind,
                    "facing": list(peri.directions),
                }
            )
        edges = [
            {
                "a": e.qubit_a,
                "b": e.qubit_b,
                "module_a": list(e.module_a),
                "module_b": list(e.module_b),
            }
            for e in self.distributed_edges()
        ]
        return {
            "dim": self.D,
            "side": self.side,
            "module_size": self.spec.module_size,
            "qubits": qubits,
            "distributed_edges": edges,
        }

    def dump_json(self, indent: int | None = None) -> str:
        return json.dumps(self.dump(), indent=indent)


def build_layout(spec: ModuleSpec, L: int) -> NetworkLayout:
    """Construct the module network for a ``(2L-1) x (2L-1)`` grid."""
    return NetworkLayout(spec, L)


def perimeter_classification(
    layout: NetworkLayout, module: tuple[int, int]
) -> dict[int, PerimeterClass]:
    """Classify every client qubit of one module as interior/edge/corner."""
    return {q: layout.perimeter_class(q) for q in layout.module_qubits(module)}


def distributed_edges(layout: NetworkLayout) -> list[DistributedEdge]:
    """All lattice edges crossing a module boundary, with serving brokers."""
    return layout.distributed_edges()
