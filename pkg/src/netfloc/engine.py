"""The live data structure: an annotated dependency tree maintained under
client insertions and deletions, with constant-time cost queries.

Costs are kept internally as integers counting multiples of 5**rho_min, so
incremental updates and from-scratch recomputations agree bit for bit even
when the bottom scale is fractional.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from heapq import heappop, heappush

from .hierarchy import Hierarchy
from .instance import ClientRegistry, Instance, InstanceError, derive_parameters, \
    largest_power_of_five_at_most


@dataclass(slots=True)
class NodeAnnotation:
    """Dynamic per-triplet state: status bits, client counters, cost values.

    ``cost`` and ``y`` are in units of 5**rho_min; ``y`` is the sum of the
    children's costs and ``cost`` adds the payments resolved at this node.
    """

    is_open: bool = False
    is_enabled: bool = False
    is_abundant: bool = False
    n_area: int = 0
    n_x: int = 0
    open_below: int = 0
    n_enabled_below: int = 0
    cost: int = 0
    y: int = 0

    def clone(self) -> "NodeAnnotation":
        return NodeAnnotation(self.is_open, self.is_enabled, self.is_abundant,
                              self.n_area, self.n_x, self.open_below,
                              self.n_enabled_below, self.cost, self.y)


@dataclass(frozen=True)
class Assignment:
    """Where a client's payment lands: its lowest enabled area, the open
    triplet it is routed through, and the facility it is served by."""

    r_area: int
    area_triplet: int
    aux_triplet: int
    open_facility: int


@dataclass
class UpdateStats:
    """Per-update work counters (affected triplets, heap pulls, status flips)."""

    affected: int = 0
    heap_pulls: int = 0
    flips: int = 0


class DirtyHeap:
    """Min-heap of triplets keyed (logradius, color, facility id).

    Membership is deduplicated and every triplet may be pulled at most once
    per update; a second pull attempt is an internal error.
    """

    __slots__ = ("_heap", "_member", "cleaned")

    def __init__(self):
        self._heap: list[tuple[int, int, int, int]] = []
        self._member: set[int] = set()
        self.cleaned: dict[int, None] = {}

    def push(self, key: tuple[int, int, int], idx: int) -> None:
        if idx in self.cleaned:
            raise RuntimeError(f"triplet {idx} cleaned twice in one update")
        if idx in self._member:
            return
        self._member.add(idx)
        heappush(self._heap, key + (idx,))

    def pop(self) -> int:
        idx = heappop(self._heap)[3]
        self._member.discard(idx)
        self.cleaned[idx] = None
        return idx

    def __bool__(self) -> bool:
        return bool(self._heap)


class OpenFacilityRegistry:
    """Facilities designated by at least one open triplet, reference counted.

    Dict ordering stands in for the linked list: constant-time add/remove and
    output linear in the number of open facilities.
    """

    __slots__ = ("_counts",)

    def __init__(self):
        self._counts: dict[int, int] = {}

    def incref(self, fid: int) -> None:
        self._counts[fid] = self._counts.get(fid, 0) + 1

    def decref(self, fid: int) -> None:
        left = self._counts[fid] - 1
        if left:
            self._counts[fid] = left
        else:
            del self._counts[fid]

    def facilities(self) -> list[int]:
        return list(self._counts)

    def items(self):
        return self._counts.items()

    def __contains__(self, fid: int) -> bool:
        return fid in self._counts

    def __len__(self) -> int:
        return len(self._counts)


class Engine:
    """Dynamic facility location engine over one instance.

    Single mutating actor: updates must be serialized, queries may run
    concurrently with each other but not with an update.  No internal
    locking.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.registry = ClientRegistry()
        self.n = 0
        self._chains: dict = {}
        self.last_update = UpdateStats()
        self._rebuild()

    @classmethod
    def from_clients(cls, instance: Instance, clients) -> "Engine":
        """From-scratch construction for a given live client set (the state
        any update sequence reaching this set must match)."""
        engine = cls(instance)
        for cid, point in dict(clients).items():
            engine.registry.add(cid, point)
        engine.n = largest_power_of_five_at_most(len(engine.registry))
        engine._rebuild()
        return engine

    # -- queries -------------------------------------------------------------

    def cost_query(self) -> float:
        """Total payment of the current solution (root cost), O(1)."""
        units = self.annotations[self.hierarchy.root].cost
        return float(units * self._unit_scale)

    def solution_query(self) -> list[int]:
        """Designated facilities of the currently open triplets."""
        return self.facility_registry.facilities()

    def assign_client(self, cid) -> Assignment:
        """Resolve a live client to its lowest enabled area and open facility."""
        if cid not in self.registry:
            raise ValueError(f"unknown client id: {cid!r}")
        anns = self.annotations
        nodes = self.hierarchy.nodes
        chain = self._chains[cid]
        area_idx = next((i for i in chain if anns[i].is_enabled), None)
        if area_idx is None:
            raise RuntimeError("no enabled area on a live client's chain")
        area = nodes[area_idx]
        area_key = (area.r, area.color)
        members = set(area.y_areas)
        best = None
        best_key = None
        for oidx in self.open_nodes:
            onode = nodes[oidx]
            if (onode.r, onode.color) > area_key:
                continue
            entry = self.hierarchy.facility_chain_at(onode.facility, area.r)
            if entry is None or entry not in members:
                continue
            key = (onode.r, onode.color, onode.facility)
            if best is None or key < best_key:
                best, best_key = oidx, key
        if best is None:
            raise RuntimeError("live client without a reachable open triplet")
        return Assignment(area.r, area_idx, best,
                          nodes[best].designated_facility)

    def realized_cost(self) -> float:
        """Opening costs of the open facilities plus client-to-facility
        distances under the current assignment."""
        dist = self.instance.distance
        facs = self.instance.facilities
        total = sum(facs[f].opening_cost for f in self.facility_registry.facilities())
        for cid, point in self.registry.items():
            assignment = self.assign_client(cid)
            total += dist(point, facs[assignment.open_facility].point)
        return total

    def state_hash(self) -> str:
        """Digest of the full dynamic state (structure, annotations, clients)."""
        h = hashlib.sha256()
        p = self.params
        h.update(repr((p.rho_min, p.rho_max, self.n)).encode())
        for node, a in zip(self.hierarchy.nodes, self.annotations):
            h.update(repr((node.facility, node.r, node.color, a.is_open,
                           a.is_enabled, a.is_abundant, a.n_area, a.n_x,
                           a.open_below, a.n_enabled_below, a.cost, a.y)).encode())
        h.update(repr(sorted(self.facility_registry.items())).encode())
        h.update(repr(sorted((str(c), pt) for c, pt in self.registry.items())).encode())
        return h.hexdigest()

    # -- updates ---------------------------------------------------------------

    def insert_client(self, cid, point: int) -> None:
        if not 0 <= point < self.instance.n_points:
            raise InstanceError(f"point index out of range: {point}")
        if cid in self.registry:
            raise ValueError(f"client id already live: {cid!r}")
        chain = tuple(self.hierarchy.area_chain(point))
        self.registry.add(cid, point)
        self._chains[cid] = chain
        self._apply(chain, +1)
        self._after_mutation()

    def delete_client(self, cid) -> None:
        if cid not in self.registry:
            raise ValueError(f"unknown client id: {cid!r}")
        chain = self._chains.pop(cid)
        self.registry.remove(cid)
        self._apply(chain, -1)
        self._after_mutation()

    def _apply(self, chain, delta: int) -> None:
        affected = self.find_affected_triplets(chain)
        flipped = self.update_status(affected, delta)
        self.update_cost(chain, flipped, delta)
        self.last_update.affected = len(affected)

    def find_affected_triplets(self, chain) -> list[int]:
        """Triplets whose near neighborhood contains the client's point: the
        same-level x-members of every node on the client's area chain."""
        nodes = self.hierarchy.nodes
        out: list[int] = []
        for idx in chain:
            out.extend(nodes[idx].x_areas)
        return out

    def check_status(self, idx: int) -> tuple[bool, bool]:
        """Proposed open bit for a triplet plus whether it differs."""
        proposal = self._proposed_open(idx)
        return proposal, proposal != self.annotations[idx].is_open

    def _proposed_open(self, idx: int) -> bool:
        a = self.annotations[idx]
        if not a.is_open and a.is_abundant and a.open_below == 0:
            return True
        if (a.is_open and a.open_below >= 1) or not a.is_abundant:
            return False
        return a.is_open

    def update_status(self, affected, delta: int) -> list[tuple[int, bool]]:
        """Adjust near-neighborhood counters, propagate open/closed flips
        through the dirty heap, and report enabled-bit changes."""
        anns = self.annotations
        nodes = self.hierarchy.nodes
        heap = DirtyHeap()
        for idx in affected:
            a = anns[idx]
            a.n_x += delta
            abundant = a.n_x >= nodes[idx].abundance_threshold
            if abundant != a.is_abundant:
                a.is_abundant = abundant
                heap.push(nodes[idx].key(), idx)
        pulls = 0
        flips = 0
        while heap:
            idx = heap.pop()
            pulls += 1
            proposal = self._proposed_open(idx)
            a = anns[idx]
            if proposal != a.is_open:
                flips += 1
                a.is_open = proposal
                node = nodes[idx]
                if proposal:
                    self.open_nodes.add(idx)
                    self.facility_registry.incref(node.designated_facility)
                    step = 1
                else:
                    self.open_nodes.discard(idx)
                    self.facility_registry.decref(node.designated_facility)
                    step = -1
                for up in node.neighbors_above:
                    anns[up].open_below += step
                    heap.push(nodes[up].key(), up)
        flipped: list[tuple[int, bool]] = []
        for idx in heap.cleaned:
            a = anns[idx]
            enabled = a.open_below >= 1 or a.is_open
            if enabled != a.is_enabled:
                flipped.append((idx, enabled))
        self.last_update = UpdateStats(heap_pulls=pulls, flips=flips)
        return flipped

    def update_cost(self, chain, flipped, delta: int) -> None:
        """Re-establish counters and the cost recursion along the client's
        chain and every root path touched by an enabled-bit flip."""
        anns = self.annotations
        nodes = self.hierarchy.nodes

        # Enabled flips first, weighted by the pre-update area counts.
        for idx, enabled in flipped:
            a = anns[idx]
            parent = nodes[idx].parent
            if parent is not None:
                anns[parent].n_enabled_below += a.n_area * (enabled - a.is_enabled)
            a.is_enabled = enabled

        # Client chain counts, propagated to parents at the new enabled bits.
        for idx in chain:
            a = anns[idx]
            a.n_area += delta
            parent = nodes[idx].parent
            if parent is not None and a.is_enabled:
                anns[parent].n_enabled_below += delta

        affected_paths = set(chain)
        for idx, _ in flipped:
            walk = idx
            while walk is not None and walk not in affected_paths:
                affected_paths.add(walk)
                walk = nodes[walk].parent
        # Node ids ascend with (logradius, facility), so sorting gives the
        # bottom-up order the cost recursion needs.
        for idx in sorted(affected_paths):
            node = nodes[idx]
            a = anns[idx]
            cost = a.y
            if a.is_enabled:
                cost += (a.n_area - a.n_enabled_below) * node.unit_weight
            if cost != a.cost:
                if node.parent is not None:
                    anns[node.parent].y += cost - a.cost
                a.cost = cost

    # -- level maintenance ------------------------------------------------------

    def _after_mutation(self) -> None:
        n = largest_power_of_five_at_most(len(self.registry))
        if n != self.n:
            self.n = n
            self.adjust_levels()

    def adjust_levels(self) -> None:
        """React to a shift of the client-count scale: rebuild the hierarchy
        and all dynamic state when the bottom logradius moves, else keep the
        structure untouched."""
        params = derive_parameters(self.instance, self.n)
        if (params.rho_min, params.rho_max) == (self.params.rho_min, self.params.rho_max):
            self.params = params
            return
        self._rebuild()

    def _rebuild(self) -> None:
        """From-scratch construction of the hierarchy and every annotation for
        the current live client set."""
        self.params = derive_parameters(self.instance, self.n)
        self.hierarchy = Hierarchy(self.instance, self.params)
        rho_min = self.params.rho_min
        self._unit_scale = 5 ** rho_min if rho_min >= 0 else 5.0 ** rho_min
        nodes = self.hierarchy.nodes
        anns = [NodeAnnotation() for _ in nodes]
        self.annotations = anns
        self.open_nodes: set[int] = set()
        self.facility_registry = OpenFacilityRegistry()

        for cid, point in self.registry.items():
            chain = tuple(self.hierarchy.area_chain(point))
            self._chains[cid] = chain
            for idx in chain:
                anns[idx].n_area += 1

        for idx, node in enumerate(nodes):
            a = anns[idx]
            a.n_x = sum(anns[m].n_area for m in node.x_areas)
            a.is_abundant = a.n_x >= node.abundance_threshold

        # Resolve open bits in ascending (logradius, color, facility) order;
        # the openness of a triplet depends only on lexicographically smaller
        # ones, so one ordered pass reaches the fixed point.
        for idx in sorted(range(len(nodes)), key=lambda i: nodes[i].key()):
            a = anns[idx]
            if a.is_abundant and a.open_below == 0:
                a.is_open = True
                self.open_nodes.add(idx)
                self.facility_registry.incref(nodes[idx].designated_facility)
                for up in nodes[idx].neighbors_above:
                    anns[up].open_below += 1

        for idx, node in enumerate(nodes):
            a = anns[idx]
            a.is_enabled = a.is_open or a.open_below >= 1
        for idx, node in enumerate(nodes):
            a = anns[idx]
            a.n_enabled_below = sum(
                anns[c].n_area for c in node.children if anns[c].is_enabled)
        for idx in range(len(nodes)):
            node = nodes[idx]
            a = anns[idx]
            cost = a.y
            if a.is_enabled:
                cost += (a.n_area - a.n_enabled_below) * node.unit_weight
            a.cost = cost
            if node.parent is not None:
                anns[node.parent].y += cost
