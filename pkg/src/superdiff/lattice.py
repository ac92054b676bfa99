"""Simulation geometries: folded chains with rungs and the two-chain scattering setup.

Bonds are split into three layers ``R``, ``G`` and ``B``. Each layer must be a
matching (no two bonds of a layer share a site) so that all gates of a layer
commute and can be applied in any order within one Floquet step.
"""
from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence


class Layer(str, Enum):
    R = "R"
    G = "G"
    B = "B"


LAYER_ORDER = (Layer.R, Layer.G, Layer.B)


class BondKind(str, Enum):
    CHAIN = "chain"
    RUNG = "rung"


class RungStyle(str, Enum):
    DIRECT = "direct"  # one bond between the two attachment sites
    MID_SITE = "mid_site"  # two bonds through an extra rung site


class Region(str, Enum):
    BEFORE_RUNG = "before_rung"
    AFTER_RUNG_SAME_CHAIN = "after_rung_same_chain"
    OTHER_CHAIN = "other_chain"
    RUNG_SITE = "rung_site"


class LatticeError(ValueError):
    """Raised when a geometry cannot be built or fails validation."""


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    layer: Layer
    kind: BondKind = BondKind.CHAIN

    @property
    def sites(self) -> tuple[int, int]:
        return (self.a, self.b)

    def key(self) -> frozenset[int]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class LatticeSpec:
    """Sites ``0..n-1``, colored bonds and the probe site.

    ``chain_count`` is the number of disjoint simple paths the chain bonds are
    expected to form (1 for a folded chain, 2 for the scattering geometry).
    ``partition`` is only populated for scattering geometries.
    """

    n: int
    bonds: tuple[Bond, ...]
    probe: int = 0
    chain_count: int = 1
    partition: Mapping[int, Region] | None = field(default=None, compare=False)

    def layer(self, layer: Layer) -> list[Bond]:
        return [b for b in self.bonds if b.layer == layer]

    @property
    def chain_bonds(self) -> list[Bond]:
        return [b for b in self.bonds if b.kind == BondKind.CHAIN]

    @property
    def rung_bonds(self) -> list[Bond]:
        return [b for b in self.bonds if b.kind == BondKind.RUNG]

    def neighbors(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = defaultdict(list)
        for bond in self.bonds:
            adj[bond.a].append(bond.b)
            adj[bond.b].append(bond.a)
        return adj

    def distances_from(self, site: int) -> dict[int, int]:
        """Breadth-first graph distance from ``site`` over all bonds."""
        adj = self.neighbors()
        dist = {site: 0}
        queue = deque([site])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def sites_in(self, region: Region) -> list[int]:
        if self.partition is None:
            raise LatticeError("lattice has no site partition")
        return sorted(s for s, r in self.partition.items() if r == region)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "probe": self.probe,
            "chain_count": self.chain_count,
            "bonds": [
                {"a": b.a, "b": b.b, "layer": b.layer.value, "kind": b.kind.value}
                for b in self.bonds
            ],
        }
        if self.partition is not None:
            out["partition"] = {str(s): r.value for s, r in sorted(self.partition.items())}
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "LatticeSpec":
        bonds = tuple(
            Bond(int(b["a"]), int(b["b"]), Layer(b["layer"]), BondKind(b["kind"]))
            for b in data["bonds"]
        )
        partition = data.get("partition")
        if partition is not None:
            partition = {int(s): Region(r) for s, r in partition.items()}
        return cls(
            n=int(data["n"]),
            bonds=bonds,
            probe=int(data.get("probe", 0)),
            chain_count=int(data.get("chain_count", 1)),
            partition=partition,
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))


def validate(spec: LatticeSpec) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems: list[str] = []
    if spec.n < 2:
        problems.append(f"site count {spec.n} < 2")
    if not 0 <= spec.probe < spec.n:
        problems.append(f"probe {spec.probe} out of range [0, {spec.n})")

    seen: set[frozenset[int]] = set()
    for bond in spec.bonds:
        for s in bond.sites:
            if not 0 <= s < spec.n:
                problems.append(f"bond ({bond.a},{bond.b}) has site {s} out of range")
        if bond.a == bond.b:
            problems.append(f"bond ({bond.a},{bond.b}) is a self-loop")
        if bond.key() in seen:
            problems.append(f"bond ({bond.a},{bond.b}) is duplicated")
        seen.add(bond.key())

    for layer in LAYER_ORDER:
        used: dict[int, Bond] = {}
        for bond in spec.layer(layer):
            for s in bond.sites:
                if s in used:
                    other = used[s]
                    problems.append(
                        f"layer {layer.value} not a matching at site {s}: "
                        f"bonds ({other.a},{other.b}) and ({bond.a},{bond.b})"
                    )
                used[s] = bond

    problems.extend(_check_linear_forest(spec))

    if spec.partition is not None:
        missing = set(range(spec.n)) - set(spec.partition)
        if missing:
            problems.append(f"partition misses sites {sorted(missing)}")
    return problems


def _check_linear_forest(spec: LatticeSpec) -> list[str]:
    chain = spec.chain_bonds
    if not chain:
        return ["chain bonds not a path: no chain bonds"]
    degree: dict[int, int] = defaultdict(int)
    adj: dict[int, list[int]] = defaultdict(list)
    for bond in chain:
        degree[bond.a] += 1
        degree[bond.b] += 1
        adj[bond.a].append(bond.b)
        adj[bond.b].append(bond.a)
    problems = [
        f"chain bonds not a path: site {s} has chain degree {d}"
        for s, d in sorted(degree.items())
        if d > 2
    ]
    # count connected components; a linear forest has |V| - |E| components
    unvisited = set(degree)
    components = 0
    while unvisited:
        components += 1
        stack = [unvisited.pop()]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in unvisited:
                    unvisited.remove(v)
                    stack.append(v)
    if len(degree) - len(chain) != components:
        problems.append("chain bonds not a path: chain bonds contain a cycle")
    if components != spec.chain_count:
        problems.append(
            f"chain bonds not a path: {components} chain component(s), "
            f"expected {spec.chain_count}"
        )
    return problems


def _assign_layers(
    edges: Sequence[tuple[int, int]], preferred: Sequence[Layer]
) -> list[Layer]:
    """Proper 3-edge-coloring of ``edges`` honoring ``preferred`` where possible.

    Depth-first search that tries the preferred layer first. Edges should be
    ordered most-constrained first; geometries here are paths plus a few
    rungs, so backtracking stays shallow.
    """
    colors: list[Layer | None] = [None] * len(edges)
    at_site: dict[int, list[int]] = defaultdict(list)
    for k, (a, b) in enumerate(edges):
        at_site[a].append(k)
        at_site[b].append(k)

    def allowed(k: int) -> list[Layer]:
        a, b = edges[k]
        taken = {colors[j] for j in at_site[a] + at_site[b] if j != k}
        first = [preferred[k]] if preferred[k] not in taken else []
        return first + [c for c in LAYER_ORDER if c not in taken and c != preferred[k]]

    # iterative DFS to avoid recursion limits on long chains
    options: list[list[Layer]] = []
    k = 0
    while k < len(edges):
        if len(options) == k:
            options.append(allowed(k))
        if options[k]:
            colors[k] = options[k].pop(0)
            k += 1
        else:
            options.pop()
            colors[k] = None
            k -= 1
            if k < 0:
                raise LatticeError("no valid 3-layer matching decomposition exists")
            colors[k] = None
    return [c for c in colors if c is not None]


def _build(
    n: int,
    chain_paths: Sequence[Sequence[int]],
    chain_offsets: Sequence[int],
    rungs: Sequence[tuple[int, int]],
    rung_pref: Sequence[Layer],
) -> list[Bond]:
    """Color chain paths by alternating parity and rungs by preference."""
    rung_edges = list(rungs)
    chain_edges: list[tuple[int, int]] = []
    chain_pref: list[Layer] = []
    for path, offset in zip(chain_paths, chain_offsets):
        pair = (LAYER_ORDER[offset % 3], LAYER_ORDER[(offset + 1) % 3])
        for k in range(len(path) - 1):
            chain_edges.append((path[k], path[k + 1]))
            chain_pref.append(pair[k % 2])
    edges = rung_edges + chain_edges
    layers = _assign_layers(edges, list(rung_pref) + chain_pref)
    bonds = [
        Bond(a, b, layer, BondKind.RUNG)
        for (a, b), layer in zip(rung_edges, layers[: len(rung_edges)])
    ]
    bonds += [
        Bond(a, b, layer, BondKind.CHAIN)
        for (a, b), layer in zip(chain_edges, layers[len(rung_edges):])
    ]
    # chain bonds first in path order, then rungs
    bonds.sort(key=lambda bd: (bd.kind != BondKind.CHAIN, min(bd.sites), max(bd.sites)))
    return bonds


def folded_rung(chain_len: int, distance: int) -> tuple[int, int]:
    """Attachment pair of a rung ``distance`` sites from the probe end.

    The chain is folded in half; site ``d`` faces site ``chain_len - 1 - d``.
    """
    other = chain_len - 1 - distance
    if distance < 0 or other - distance < 2:
        raise LatticeError(
            f"rung distance {distance} invalid for folded chain of {chain_len} sites"
        )
    return (distance, other)


def build_folded_chain(
    chain_len: int,
    rung_attachments: Iterable[tuple[int, int]] = (),
    rung_style: RungStyle | str = RungStyle.DIRECT,
    probe: int = 0,
) -> LatticeSpec:
    """Open chain ``0..chain_len-1`` with optional rungs between chain sites.

    Even chain bonds go to layer R and odd ones to G; rungs prefer B. With
    ``MidSite`` rungs one extra site is appended per rung, and chain bonds
    near the attachments may be moved to another layer to keep every layer a
    matching.
    """
    rung_style = RungStyle(rung_style)
    if chain_len < 4:
        raise LatticeError(f"chain_len must be >= 4, got {chain_len}")
    rung_attachments = [tuple(sorted(map(int, r))) for r in rung_attachments]
    used: set[int] = set()
    for a, b in rung_attachments:
        for s in (a, b):
            if not 0 <= s < chain_len:
                raise LatticeError(f"rung attachment {s} out of range [0, {chain_len})")
            if s in used:
                raise LatticeError(f"rung attachment site {s} used twice")
            used.add(s)
        if abs(a - b) < 2:
            raise LatticeError(f"rung ({a},{b}) joins adjacent or identical chain sites")
    n = chain_len + (len(rung_attachments) if rung_style == RungStyle.MID_SITE else 0)
    if not 0 <= probe < n:
        raise LatticeError(f"probe {probe} out of range [0, {n})")

    rungs: list[tuple[int, int]] = []
    prefs: list[Layer] = []
    for k, (a, b) in enumerate(rung_attachments):
        if rung_style == RungStyle.DIRECT:
            rungs.append((a, b))
            prefs.append(Layer.B)
        else:
            m = chain_len + k
            rungs += [(a, m), (m, b)]
            prefs += [Layer.B, Layer.B]
    bonds = _build(n, [list(range(chain_len))], [0], rungs, prefs)
    spec = LatticeSpec(n=n, bonds=tuple(bonds), probe=probe)
    _raise_if_invalid(spec)
    return spec


def build_scattering_geometry(
    chain_len: int, attach_1: int | None = None, attach_2: int | None = None
) -> LatticeSpec:
    """Two parallel chains joined through one rung site.

    Chain 1 occupies sites ``0..L-1`` with the probe at site 0, chain 2 sites
    ``L..2L-1``, and the rung site is ``2L``. Attachments default to the chain
    midpoints; ``attach_2`` is a global site index on chain 2.
    """
    if chain_len < 4:
        raise LatticeError(f"chain_len must be >= 4, got {chain_len}")
    L = chain_len
    attach_1 = L // 2 if attach_1 is None else int(attach_1)
    attach_2 = L + L // 2 if attach_2 is None else int(attach_2)
    if not 0 <= attach_1 < L:
        raise LatticeError(f"attach_1={attach_1} is not a site of chain 1 [0, {L})")
    if not L <= attach_2 < 2 * L:
        raise LatticeError(f"attach_2={attach_2} is not a site of chain 2 [{L}, {2 * L})")
    rung = 2 * L
    # chain 2 alternates G/B so the second rung bond can sit in R
    bonds = _build(
        2 * L + 1,
        [list(range(L)), list(range(L, 2 * L))],
        [0, 1],
        [(attach_1, rung), (attach_2, rung)],
        [Layer.B, Layer.R],
    )
    partition: dict[int, Region] = {}
    for s in range(L):
        partition[s] = Region.BEFORE_RUNG if s <= attach_1 else Region.AFTER_RUNG_SAME_CHAIN
    for s in range(L, 2 * L):
        partition[s] = Region.OTHER_CHAIN
    partition[rung] = Region.RUNG_SITE
    spec = LatticeSpec(
        n=2 * L + 1, bonds=tuple(bonds), probe=0, chain_count=2, partition=partition
    )
    _raise_if_invalid(spec)
    return spec


def _raise_if_invalid(spec: LatticeSpec) -> None:
    problems = validate(spec)
    if problems:
        raise LatticeError("; ".join(problems))
