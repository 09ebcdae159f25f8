"""Molecular graph model: atoms, bonds, molecules, and validity reports.

Molecules are immutable once constructed and safe to share across threads.
All chemistry in this package (validity checking, canonicalization,
fingerprints, reconstruction scoring) operates on these types.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

# Recognized element symbols (periodic table, H through Og).
ELEMENT_SYMBOLS = frozenset(
    """
    H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni
    Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I
    Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt
    Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr
    Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og
    """.split()
)

# Atoms writable without brackets when uncharged and at default valence.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

# Elements that may carry an aromatic (lowercase) flag.
AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As", "Te"})

# Permitted total bond orders (including hydrogens) per element at charge 0.
# A formal charge of +q shifts every permitted valence by +q.
PERMITTED_VALENCES: dict[str, tuple[int, ...]] = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}


def permitted_valences(element: str, charge: int) -> tuple[int, ...] | None:
    """Allowed total bond orders for an element at a formal charge.

    Returns None for elements outside the valence table (no constraint).
    """
    base = PERMITTED_VALENCES.get(element)
    if base is None:
        return None
    return tuple(v + charge for v in base if v + charge >= 0)


class BondOrder(enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def bond_electrons(self) -> int:
        """Integer bond order used in valence accounting (aromatic counts 1;
        the extra aromatic contribution is resolved by kekulization)."""
        return _BOND_ELECTRONS[self]

    @property
    def symbol(self) -> str:
        return _BOND_SYMBOLS[self]


_BOND_ELECTRONS = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 1,
}

_BOND_SYMBOLS = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


@dataclass(frozen=True)
class Atom:
    """One atom: element symbol, aromatic flag, charge, hydrogens, isotope.

    ``explicit_h`` is the bracket-specified hydrogen count (None when the
    atom was written bare and hydrogens were inferred); ``hydrogens`` is the
    total attached hydrogen count actually in effect.
    """

    element: str
    index: int
    is_aromatic: bool = False
    formal_charge: int = 0
    explicit_h: int | None = None
    isotope: int | None = None
    hydrogens: int = 0

    def __post_init__(self) -> None:
        if self.element not in ELEMENT_SYMBOLS:
            raise ValueError(f"unrecognized element symbol {self.element!r}")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise ValueError("explicit hydrogen count must be >= 0")

    @property
    def symbol(self) -> str:
        """Element symbol as written in SMILES (lowercase when aromatic)."""
        return self.element.lower() if self.is_aromatic else self.element


@dataclass(frozen=True)
class Bond:
    """Undirected bond between two atom indices."""

    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("bond endpoints must be distinct")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)

    def other(self, idx: int) -> int:
        if idx == self.a:
            return self.b
        if idx == self.b:
            return self.a
        raise ValueError(f"atom {idx} is not an endpoint of this bond")

    @property
    def key(self) -> tuple[int, int]:
        """Order-independent endpoint pair."""
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass(frozen=True)
class Molecule:
    """Immutable molecular graph with perceived rings and fragments.

    ``rings`` holds the smallest set of smallest rings as ordered atom-index
    cycles; ``fragments`` holds one sorted atom-index tuple per connected
    component; ``parse_notes`` records information discarded during parsing
    (stereo markers, atom maps).
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    rings: tuple[tuple[int, ...], ...] = ()
    fragments: tuple[tuple[int, ...], ...] = ()
    parse_notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen: set[tuple[int, int]] = set()
        for bond in self.bonds:
            if not (0 <= bond.a < len(self.atoms) and 0 <= bond.b < len(self.atoms)):
                raise ValueError("bond endpoint out of range")
            if bond.key in seen:
                raise ValueError(f"duplicate bond between atoms {bond.key}")
            seen.add(bond.key)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def _adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            nbrs[bond.a].append(bond.b)
            nbrs[bond.b].append(bond.a)
        return tuple(tuple(n) for n in nbrs)

    @cached_property
    def _bond_lookup(self) -> dict[tuple[int, int], Bond]:
        return {bond.key: bond for bond in self.bonds}

    @cached_property
    def ring_atoms(self) -> frozenset[int]:
        """Atoms lying on at least one cycle (via bridge detection, so the
        flag is exact even where the SSSR is ambiguous)."""
        bridges = _find_bridges(len(self.atoms), self.bonds)
        cyclic: set[int] = set()
        for bond in self.bonds:
            if bond.key not in bridges:
                cyclic.add(bond.a)
                cyclic.add(bond.b)
        return frozenset(cyclic)

    def neighbors(self, idx: int) -> tuple[int, ...]:
        return self._adjacency[idx]

    def degree(self, idx: int) -> int:
        return len(self._adjacency[idx])

    def bond_between(self, i: int, j: int) -> Bond | None:
        return self._bond_lookup.get((i, j) if i < j else (j, i))

    def bonds_of(self, idx: int) -> tuple[Bond, ...]:
        return tuple(
            self._bond_lookup[(idx, j) if idx < j else (j, idx)]
            for j in self._adjacency[idx]
        )

    def in_ring(self, idx: int) -> bool:
        return idx in self.ring_atoms


def _find_bridges(n: int, bonds: tuple[Bond, ...]) -> set[tuple[int, int]]:
    """Bridge edges via iterative Tarjan lowlink traversal."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for b_idx, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, b_idx))
        adj[bond.b].append((bond.a, b_idx))

    disc = [-1] * n
    low = [0] * n
    bridges: set[tuple[int, int]] = set()
    timer = 0

    for root in range(n):
        if disc[root] != -1:
            continue
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]
        while stack:
            node, in_edge, ptr = stack.pop()
            if ptr == 0:
                disc[node] = low[node] = timer
                timer += 1
            if ptr < len(adj[node]):
                stack.append((node, in_edge, ptr + 1))
                nbr, edge_idx = adj[node][ptr]
                if edge_idx == in_edge:
                    continue
                if disc[nbr] == -1:
                    stack.append((nbr, edge_idx, 0))
                else:
                    low[node] = min(low[node], disc[nbr])
            else:
                if in_edge != -1:
                    bond = bonds[in_edge]
                    parent = bond.a if bond.b == node else bond.b
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        bridges.add(bond.key)
    return bridges


@dataclass(frozen=True)
class ValidityFailure:
    """One validity violation; atom_index is None for whole-string failures."""

    atom_index: int | None
    reason: str


@dataclass(frozen=True)
class ValidityReport:
    is_valid: bool
    failures: tuple[ValidityFailure, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.is_valid != (len(self.failures) == 0):
            raise ValueError("is_valid must mirror an empty failure list")
