"""Brute-force reference routines shared by the structural tests: everything
here scans all pairs directly instead of using the tree traversals."""

from netfloc import C1, C2, C3, C4, CX, Engine, Hierarchy, derive_parameters, radius


def build(instance, n=0) -> Hierarchy:
    return Hierarchy(instance, derive_parameters(instance, n))


def brute_balls(instance, hierarchy, p, cstar):
    """All node ids whose scaled ball contains p, by a full scan."""
    dist = instance.distance
    fp = instance.facility_point
    return sorted(
        node.idx
        for node in hierarchy.nodes
        if dist(p, fp(node.facility)) <= radius(cstar, node.r)
    )


def chain_entry(hierarchy, p, r):
    """The level-r node on p's area chain, or None below the chain bottom."""
    chain = hierarchy.area_chain(p)
    bottom = hierarchy.nodes[chain[0]].r
    off = r - bottom
    return chain[off] if off >= 0 else None


def structural_problems(instance, hierarchy) -> list[str]:
    """Static-decomposition checks over all declared points and levels."""
    problems: list[str] = []
    dist = instance.distance
    fp = instance.facility_point
    params = hierarchy.params
    nodes = hierarchy.nodes

    # Separation within each level, and coverage of every facility.
    for r, members in hierarchy.level_sets.items():
        thr = radius(C1, r)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                if dist(fp(members[a]), fp(members[b])) <= thr:
                    problems.append(f"level {r}: members {members[a]},{members[b]} too close")
        for fac in instance.facilities:
            if min(dist(fp(fac.id), fp(m)) for m in members) > thr:
                problems.append(f"level {r}: facility {fac.id} uncovered")

    chains = {p: hierarchy.area_chain(p) for p in range(instance.n_points)}

    # Chains are parent paths (laminarity), and a point has a level-r area
    # exactly when some level-r ball of radius C2*5**r contains it.
    for p, chain in chains.items():
        for lower, upper in zip(chain, chain[1:]):
            if nodes[lower].parent != upper:
                problems.append(f"point {p}: chain break at node {lower}")
        bottom = nodes[chain[0]].r
        for r in range(params.rho_min, params.rho_max + 1):
            covered = any(
                dist(p, fp(nodes[i].facility)) <= radius(C2, r)
                for i in hierarchy.by_level[r])
            if covered != (r >= bottom):
                problems.append(f"point {p}: level {r} ball cover != area presence")

    def entry(p, r):
        chain = chains[p]
        off = r - nodes[chain[0]].r
        return chain[off] if off >= 0 else None

    # Unit balls around any facility land inside one near neighborhood.
    for fac in instance.facilities:
        for r in range(params.rho_min, params.rho_max + 1):
            host = min(hierarchy.by_level[r],
                       key=lambda i: (dist(fp(fac.id), fp(nodes[i].facility)),
                                      nodes[i].facility))
            thr_x = radius(CX, r)
            for p in range(instance.n_points):
                if dist(p, fp(fac.id)) > radius(1, r):
                    continue
                e = entry(p, r)
                if e is None or dist(fp(nodes[host].facility),
                                     fp(nodes[e].facility)) > thr_x:
                    problems.append(
                        f"facility {fac.id} level {r}: ball point {p} escapes")

    # Near/far neighborhoods stay inside their stated radii.
    for p in range(instance.n_points):
        chain = chains[p]
        for node_idx in chain:
            node = nodes[node_idx]
            for other_idx in hierarchy.by_level[node.r]:
                other = nodes[other_idx]
                if node_idx in other.x_areas and \
                        dist(p, fp(other.facility)) > radius(C3, node.r):
                    problems.append(f"x radius exceeded at node {other_idx}, point {p}")
                if node_idx in other.y_areas and \
                        dist(p, fp(other.facility)) > radius(C4, node.r):
                    problems.append(f"y radius exceeded at node {other_idx}, point {p}")

    # Distinct colors within the conflict radius.
    for r, ids in hierarchy.by_level.items():
        thr = radius(C4, r)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                na, nb = nodes[ids[a]], nodes[ids[b]]
                if dist(fp(na.facility), fp(nb.facility)) <= thr and na.color == nb.color:
                    problems.append(f"level {r}: color clash {na.facility},{nb.facility}")

    # Designated facilities sit close and are genuinely the cheapest inside
    # the near neighborhood.
    facs = instance.facilities
    for node in nodes:
        if dist(fp(node.facility), fp(node.designated_facility)) > radius(C3, node.r):
            problems.append(f"designated facility too far at node {node.idx}")
        members = set(node.x_areas)
        eligible = [f for f in facs if entry(f.point, node.r) in members]
        best = min(eligible, key=lambda f: (f.opening_cost, f.id))
        if (best.opening_cost, best.id) != (node.designated_cost,
                                            node.designated_facility):
            problems.append(f"wrong designation at node {node.idx}")
        if node.designated_cost > facs[node.facility].opening_cost:
            problems.append(f"designated cost above own cost at node {node.idx}")

    return problems
