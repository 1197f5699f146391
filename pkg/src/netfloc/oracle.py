"""Independent, slow, obviously-correct recomputation of the full dynamic
state, plus an exact exhaustive optimum for small instances.

The evaluator deliberately avoids the engine's incremental machinery and the
hierarchy's precomputed neighborhood lists: point areas come from a linear
scan over all (facility, logradius) pairs, neighborhoods from brute-force
pairwise distance tests, and status bits from one ordered pass over the
definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import Assignment, Engine, NodeAnnotation
from .hierarchy import C2, CX, CY, Hierarchy, radius
from .instance import Instance, NetflocError


class HierarchyMismatch(NetflocError):
    """Snapshots built over different hierarchies cannot be compared."""


@dataclass
class StateSnapshot:
    """Full dynamic state: one annotation per triplet, the open facility set,
    and one assignment per live client."""

    structure: tuple
    annotations: list[NodeAnnotation]
    open_facilities: frozenset
    assignments: dict


def structure_signature(hierarchy: Hierarchy) -> tuple:
    return tuple(
        (n.facility, n.r, n.color,
         None if n.parent is None else hierarchy.nodes[n.parent].facility,
         n.designated_facility, n.designated_cost)
        for n in hierarchy.nodes
    )


def engine_snapshot(engine: Engine) -> StateSnapshot:
    """Capture the engine's current state in snapshot form."""
    return StateSnapshot(
        structure=structure_signature(engine.hierarchy),
        annotations=[a.clone() for a in engine.annotations],
        open_facilities=frozenset(engine.facility_registry.facilities()),
        assignments={cid: engine.assign_client(cid)
                     for cid, _ in engine.registry.items()},
    )


class OracleView:
    """Definition-level evaluator bound to one instance and hierarchy.

    The constructor performs all static brute-force precomputation (point
    chains, per-level near neighborhoods, facility membership in far
    neighborhoods) so that repeated state recomputations stay cheap.
    """

    def __init__(self, instance: Instance, hierarchy: Hierarchy):
        self.instance = instance
        self.hierarchy = hierarchy
        nodes = hierarchy.nodes
        dist = instance.distance
        fpoint = [instance.facilities[n.facility].point for n in nodes]
        self._fpoint = fpoint

        self.point_chain: list[tuple[int, ...]] = [
            self._scan_chain(p) for p in range(instance.n_points)
        ]

        # Same-level node ids within the near-neighborhood radius, by a plain
        # pairwise scan.
        self.x_members: list[list[int]] = []
        for idx, node in enumerate(nodes):
            thr = radius(CX, node.r)
            self.x_members.append([
                other
                for other in hierarchy.by_level[node.r]
                if dist(fpoint[idx], fpoint[other]) <= thr
            ])

        # Facilities whose point falls in each node's far neighborhood, and
        # the reverse index used when resolving open bits.
        self.y_facilities: list[frozenset[int]] = []
        self.nodes_with_fac_in_y: dict[int, list[int]] = {
            f.id: [] for f in instance.facilities}
        for idx, node in enumerate(nodes):
            thr = radius(CY, node.r)
            inside = []
            for fac in instance.facilities:
                chain = self.point_chain[fac.point]
                entry = self._chain_entry(chain, node.r)
                if entry is not None and dist(fpoint[idx], fpoint[entry]) <= thr:
                    inside.append(fac.id)
                    self.nodes_with_fac_in_y[fac.id].append(idx)
            self.y_facilities.append(frozenset(inside))

        # Smallest client count satisfying the abundance inequality, from the
        # exact rational form of the designated cost at each scale.
        self._threshold = [
            math.ceil(Fraction(node.designated_cost) / Fraction(5) ** node.r)
            for node in nodes
        ]
        self._order = sorted(range(len(nodes)), key=lambda i: nodes[i].key())

    def _scan_chain(self, p: int) -> tuple[int, ...]:
        """Bottom area of a point by linear scan over all pairs, then the
        parent path to the root."""
        hierarchy = self.hierarchy
        nodes = hierarchy.nodes
        dist = self.instance.distance
        params = hierarchy.params
        bottom = None
        for r in range(params.rho_min, params.rho_max + 1):
            thr = radius(C2, r)
            best = None
            for idx in hierarchy.by_level[r]:
                d = dist(p, self._fpoint[idx])
                if d <= thr:
                    key = (d, nodes[idx].facility)
                    if best is None or key < best[0]:
                        best = (key, idx)
            if best is not None:
                bottom = best[1]
                break
        chain = [bottom]
        while nodes[chain[-1]].parent is not None:
            chain.append(nodes[chain[-1]].parent)
        return tuple(chain)

    def _chain_entry(self, chain: tuple[int, ...], r: int):
        off = r - self.hierarchy.nodes[chain[0]].r
        if off < 0:
            return None
        return chain[off]

    def point_in_x(self, p: int, idx: int) -> bool:
        """Whether a point's level-r area lies in the near neighborhood of a
        node, by a direct distance test."""
        node = self.hierarchy.nodes[idx]
        entry = self._chain_entry(self.point_chain[p], node.r)
        if entry is None:
            return False
        return self.instance.distance(
            self._fpoint[idx], self._fpoint[entry]) <= radius(CX, node.r)

    def recompute_state(self, clients) -> StateSnapshot:
        """Evaluate every annotation, the open facility set, and all client
        assignments directly from the definitions."""
        hierarchy = self.hierarchy
        nodes = hierarchy.nodes
        count = len(nodes)
        n_area = [0] * count
        chains = {}
        for cid, point in dict(clients).items():
            chain = self.point_chain[point]
            chains[cid] = chain
            for idx in chain:
                n_area[idx] += 1

        n_x = [sum(n_area[m] for m in self.x_members[idx]) for idx in range(count)]
        abundant = [n_x[idx] >= self._threshold[idx] for idx in range(count)]

        open_bits = [False] * count
        open_below = [0] * count
        for idx in self._order:
            if abundant[idx] and open_below[idx] == 0:
                open_bits[idx] = True
                key = nodes[idx].key()[:2]
                for other in self.nodes_with_fac_in_y[nodes[idx].facility]:
                    if nodes[other].key()[:2] > key:
                        open_below[other] += 1
        enabled = [open_bits[idx] or open_below[idx] >= 1 for idx in range(count)]

        n_enabled_below = [0] * count
        payments = {}
        cost = [0] * count
        for cid, chain in chains.items():
            seen_enabled = False
            r_area = None
            for idx in chain:
                if seen_enabled:
                    n_enabled_below[idx] += 1
                if enabled[idx]:
                    seen_enabled = True
                    if r_area is None:
                        r_area = idx
            payments[cid] = r_area
            if r_area is not None:
                unit = nodes[r_area].unit_weight
                for idx in chain:
                    cost[idx] += unit
        for idx in range(count):
            if not enabled[idx]:
                cost[idx] = 0
        y = [0] * count
        for idx, node in enumerate(nodes):
            if node.parent is not None:
                y[node.parent] += cost[idx]

        open_list = [idx for idx in self._order if open_bits[idx]]
        assignments = {}
        for cid, chain in chains.items():
            area_idx = payments[cid]
            area = nodes[area_idx]
            area_key = (area.r, area.color)
            best = None
            best_key = None
            for oidx in open_list:
                onode = nodes[oidx]
                key = (onode.r, onode.color, onode.facility)
                if key[:2] > area_key:
                    continue
                if onode.facility not in self.y_facilities[area_idx]:
                    continue
                if best is None or key < best_key:
                    best, best_key = oidx, key
            assignments[cid] = Assignment(
                area.r, area_idx, best, nodes[best].designated_facility)

        annotations = [
            NodeAnnotation(
                is_open=open_bits[idx],
                is_enabled=enabled[idx],
                is_abundant=abundant[idx],
                n_area=n_area[idx],
                n_x=n_x[idx],
                open_below=open_below[idx],
                n_enabled_below=n_enabled_below[idx],
                cost=cost[idx],
                y=y[idx],
            )
            for idx in range(count)
        ]
        open_facs = frozenset(nodes[idx].designated_facility for idx in open_list)
        return StateSnapshot(structure_signature(hierarchy), annotations,
                             open_facs, assignments)


def recompute_state(instance: Instance, hierarchy: Hierarchy, clients) -> StateSnapshot:
    """One-shot from-scratch evaluation (builds a throwaway view)."""
    return OracleView(instance, hierarchy).recompute_state(clients)


_ANNOTATION_FIELDS = ("is_open", "is_enabled", "is_abundant", "n_area", "n_x",
                      "open_below", "n_enabled_below", "cost", "y")


def compare_states(left: StateSnapshot, right: StateSnapshot) -> list[str]:
    """Field-by-field diff of two snapshots; empty list means identical."""
    if left.structure != right.structure:
        raise HierarchyMismatch("snapshots cover different hierarchies")
    if (left.annotations == right.annotations
            and left.open_facilities == right.open_facilities
            and left.assignments == right.assignments):
        return []
    diffs: list[str] = []
    for pos, (la, ra) in enumerate(zip(left.annotations, right.annotations)):
        if la == ra:
            continue
        fac, r, color = left.structure[pos][:3]
        for field in _ANNOTATION_FIELDS:
            lv, rv = getattr(la, field), getattr(ra, field)
            if lv != rv:
                diffs.append(
                    f"node (j={fac},r={r},s={color}): {field} left={lv} right={rv}")
    if left.open_facilities != right.open_facilities:
        diffs.append(
            f"open facilities: left={sorted(left.open_facilities)} "
            f"right={sorted(right.open_facilities)}")
    if left.assignments != right.assignments:
        keys = set(left.assignments) | set(right.assignments)
        for cid in sorted(keys, key=str):
            lv = left.assignments.get(cid)
            rv = right.assignments.get(cid)
            if lv != rv:
                diffs.append(f"assignment[{cid}]: left={lv} right={rv}")
    return diffs


@dataclass(frozen=True)
class OptResult:
    """Exact optimum: total cost, the open facility set, and the
    nearest-open-facility assignment."""

    cost: float
    open_set: frozenset
    assignment: dict


def brute_force_opt(instance: Instance, clients) -> OptResult:
    """Exact optimum by enumerating every non-empty facility subset.

    Refuses instances with more than 20 facilities; with no clients the
    optimum is the empty opening set at cost zero.
    """
    k = len(instance.facilities)
    if k > 20:
        raise ValueError(f"brute force capped at 20 facilities, got {k}")
    clients = dict(clients)
    if not clients:
        return OptResult(0.0, frozenset(), {})
    cids = list(clients)
    dmat = np.array([
        [instance.distance(clients[cid], fac.point) for fac in instance.facilities]
        for cid in cids
    ])
    fcost = np.array([fac.opening_cost for fac in instance.facilities])

    best_cost = math.inf
    best_mask = 0
    n_masks = 1 << k
    # Per-mask nearest-distance vectors memoized over submasks when small
    # enough; otherwise recomputed per mask.
    memo_ok = n_masks * len(cids) <= 4_000_000
    minvec: list = [None] * n_masks if memo_ok else []
    open_cost = [0.0] * n_masks if memo_ok else None
    for mask in range(1, n_masks):
        low = mask & -mask
        j = low.bit_length() - 1
        rest = mask ^ low
        if memo_ok:
            if rest:
                vec = np.minimum(minvec[rest], dmat[:, j])
                fsum = float(open_cost[rest] + fcost[j])
            else:
                vec = dmat[:, j]
                fsum = float(fcost[j])
            minvec[mask] = vec
            open_cost[mask] = fsum
        else:
            cols = [b for b in range(k) if mask >> b & 1]
            vec = dmat[:, cols].min(axis=1)
            fsum = float(fcost[cols].sum())
        total = fsum + float(vec.sum())
        if total < best_cost:
            best_cost = total
            best_mask = mask
    cols = [b for b in range(k) if best_mask >> b & 1]
    sub = dmat[:, cols]
    picks = sub.argmin(axis=1)
    assignment = {cid: cols[int(picks[i])] for i, cid in enumerate(cids)}
    return OptResult(best_cost, frozenset(cols), assignment)


def logical_violations(view: OracleView, engine: Engine) -> list[str]:
    """Engine-state sanity conditions that must hold after every update:
    open implies enabled, abundant implies enabled, no client sits in two
    open near neighborhoods, a non-empty client set keeps at least one
    triplet open and the root enabled, and the root cost equals the summed
    client payments."""
    problems: list[str] = []
    nodes = engine.hierarchy.nodes
    anns = engine.annotations
    for idx, a in enumerate(anns):
        if a.is_open and not a.is_enabled:
            problems.append(f"open but not enabled: node {nodes[idx].key()}")
        if a.is_abundant and not a.is_enabled:
            problems.append(f"abundant but not enabled: node {nodes[idx].key()}")
    live = list(engine.registry.items())
    open_nodes = sorted(engine.open_nodes)
    for cid, point in live:
        hits = [idx for idx in open_nodes if view.point_in_x(point, idx)]
        if len(hits) > 1:
            problems.append(f"client {cid!r} in {len(hits)} open neighborhoods")
    if live:
        if not open_nodes:
            problems.append("live clients but no open triplet")
        if not anns[engine.hierarchy.root].is_enabled:
            problems.append("live clients but root not enabled")
        total = sum(nodes[engine.assign_client(cid).area_triplet].unit_weight
                    for cid, _ in live)
        if total != anns[engine.hierarchy.root].cost:
            problems.append(
                f"root cost {anns[engine.hierarchy.root].cost} != "
                f"summed payments {total}")
    elif anns[engine.hierarchy.root].cost != 0:
        problems.append("no clients but nonzero root cost")
    return problems
