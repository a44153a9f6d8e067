"""Multi-depot edge assembly crossover."""

from collections import Counter
from dataclasses import dataclass, field

from hgamp import LOG
from hgamp.exceptions import HgampError, InternalInvariantError
from hgamp.model import Solution, broken_pairs_distance

LABEL_A = "A"
LABEL_B = "B"


def _edge(u, v):
    return (u, v) if u <= v else (v, u)


def solution_edges(solution):
    edges = Counter()
    for route in solution.routes:
        for u, v in route.edges():
            edges[_edge(u, v)] += 1
    return edges


def depot_degrees(solution):
    degree = Counter()
    for route in solution.routes:
        degree[route.depot] += 2
    return degree


def extend_with_dummy_loops(parent_a, parent_b):
    """
    Edge multisets of both parents with zero-cost loops balancing depot degrees.

    A depot with `d_A` route ends in A and `d_B` in B gets `|d_A - d_B| / 2`
    loops on the side with fewer.
    """
    edges_a = solution_edges(parent_a)
    edges_b = solution_edges(parent_b)
    deg_a = depot_degrees(parent_a)
    deg_b = depot_degrees(parent_b)
    for depot in set(deg_a) | set(deg_b):
        diff = deg_a.get(depot, 0) - deg_b.get(depot, 0)
        if diff % 2:
            raise InternalInvariantError(f"odd degree difference at depot {depot}")
        if diff > 0:
            edges_b[(depot, depot)] += diff // 2
        elif diff < 0:
            edges_a[(depot, depot)] += -diff // 2
    return edges_a, edges_b


@dataclass
class JointGraph:
    """Labeled edges present in one parent but not the other (with multiplicity)."""

    edges: list = field(default_factory=list)

    @classmethod
    def build(cls, edges_a, edges_b):
        graph = cls()
        for e in sorted(edges_a.keys() | edges_b.keys()):
            diff = edges_a.get(e, 0) - edges_b.get(e, 0)
            label = LABEL_A if diff > 0 else LABEL_B
            graph.edges.extend((e[0], e[1], label) for _ in range(abs(diff)))
        graph.check()
        return graph

    def check(self):
        balance = Counter()
        for u, v, label in self.edges:
            step = 1 if label == LABEL_A else -1
            balance[u] += step
            balance[v] += step
        broken = [v for v, b in balance.items() if b]
        if broken:
            raise InternalInvariantError(f"joint graph unbalanced at vertices {sorted(broken)}")

    def __len__(self):
        return len(self.edges)


def partition_ab_cycles(joint, rng):
    """
    Split the joint graph into edge-disjoint cycles alternating between A and B edges.

    A random alternating walk closes a cycle whenever it returns to a vertex
    after an even number of steps; the closed part is cut out and the walk
    continues from there.
    """
    adjacency = {LABEL_A: {}, LABEL_B: {}}
    for idx, (u, v, label) in enumerate(joint.edges):
        adjacency[label].setdefault(u, []).append(idx)
        adjacency[label].setdefault(v, []).append(idx)

    used = [False] * len(joint.edges)
    remaining = len(joint.edges)
    cycles = []

    def other(idx, x):
        u, v, _ = joint.edges[idx]
        return v if u == x else u

    while remaining:
        starts = sorted({u for idx, (u, v, _l) in enumerate(joint.edges) if not used[idx]})
        start = starts[int(rng.integers(len(starts)))]
        path = [start]
        path_edges = []
        positions = {start: [0]}

        while True:
            x = path[-1]
            label = LABEL_A if len(path_edges) % 2 == 0 else LABEL_B
            options = [idx for idx in adjacency[label].get(x, []) if not used[idx]]
            # a loop is listed twice at its vertex
            options = list(dict.fromkeys(options))
            if not options:
                raise InternalInvariantError(f"alternating walk stuck at vertex {x}")

            idx = options[int(rng.integers(len(options)))]
            used[idx] = True
            remaining -= 1
            y = other(idx, x)
            path_edges.append(idx)
            path.append(y)
            t = len(path) - 1

            closing = None
            for p in reversed(positions.get(y, [])):
                if (t - p) % 2 == 0:
                    closing = p
                    break
            if closing is None:
                positions.setdefault(y, []).append(t)
                continue

            cycles.append(tuple(joint.edges[k] for k in path_edges[closing:]))
            for v in path[closing + 1 : t]:
                positions[v].pop()
            del path[closing + 1 :]
            del path_edges[closing:]
            if not path_edges:
                break

    return cycles


def _cycle_vertices(cycle):
    return {x for u, v, _l in cycle for x in (u, v)}


def group_esets(cycles, beta, rng, depots=()):
    """
    Merge cycles sharing a customer, then merge random pairs until at most `beta` remain.

    Vertices in `depots` do not link cycles; nearly every cycle passes a depot.
    When the customers still chain every cycle into one group, each cycle
    becomes its own E-set, since the whole joint graph only rebuilds the other
    parent.
    """
    depots = set(depots)
    parent = list(range(len(cycles)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    for i, cycle in enumerate(cycles):
        for x in sorted(_cycle_vertices(cycle) - depots):
            if x in owner:
                a, b = find(owner[x]), find(i)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[x] = i

    groups = {}
    for i in range(len(cycles)):
        groups.setdefault(find(i), []).extend(cycles[i])
    esets = [groups[k] for k in sorted(groups)]
    if len(esets) == 1 and len(cycles) > 1:
        esets = [list(cycle) for cycle in cycles]

    while len(esets) > max(beta, 1):
        a, b = sorted(int(k) for k in rng.choice(len(esets), size=2, replace=False))
        merged = esets[a] + esets[b]
        del esets[b]
        esets[a] = merged

    return esets


def apply_eset(base_edges, eset, base_label=LABEL_A):
    """Swap the E-set's base-labeled edges for its other-labeled edges, dropping loops."""
    result = Counter(base_edges)
    for u, v, label in eset:
        if u == v:
            continue
        e = _edge(u, v)
        if label == base_label:
            result[e] -= 1
            if result[e] == 0:
                del result[e]
        else:
            result[e] += 1
    for (u, v), count in list(result.items()):
        if u == v:
            del result[(u, v)]
    return result


@dataclass
class Intermediate:
    routes: list = field(default_factory=list)
    trails: list = field(default_factory=list)
    subtours: list = field(default_factory=list)


def decompose(edges, instance):
    """
    Read an edge multiset as depot routes, mega trails and customer-only subtours.

    Mega trails are closed chains of depot-to-depot paths whose ends differ.
    """
    adjacency = {}
    for (u, v), count in sorted(edges.items()):
        for _ in range(count):
            adjacency.setdefault(u, []).append(v)
            adjacency.setdefault(v, []).append(u)

    for v in instance.customer_vertices:
        if len(adjacency.get(v, [])) != 2:
            raise InternalInvariantError(f"customer {v} has degree {len(adjacency.get(v, []))}")

    def consume(a, b):
        adjacency[a].remove(b)
        adjacency[b].remove(a)

    result = Intermediate()
    segments = []
    for depot in range(instance.m):
        while adjacency.get(depot):
            prev, cur = depot, adjacency[depot][0]
            consume(prev, cur)
            customers = [cur]
            while True:
                nxt = adjacency[cur][0]
                consume(cur, nxt)
                if instance.is_depot(nxt):
                    break
                prev, cur = cur, nxt
                customers.append(cur)
            if nxt == depot:
                result.routes.append((depot, customers))
            else:
                segments.append((depot, customers, nxt))

    for v in instance.customer_vertices:
        if not adjacency[v]:
            continue
        cycle = [v]
        cur = v
        while True:
            nxt = adjacency[cur][0]
            consume(cur, nxt)
            if nxt == v:
                break
            cycle.append(nxt)
            cur = nxt
        result.subtours.append(cycle)

    result.trails = _chain_trails(segments)
    return result


def _chain_trails(segments):
    pending = list(segments)
    trails = []
    while pending:
        first = pending.pop(0)
        trail = [first]
        while trail[-1][2] != first[0]:
            end = trail[-1][2]
            for k, (a, customers, b) in enumerate(pending):
                if a == end:
                    trail.append(pending.pop(k))
                    break
                if b == end:
                    pending.pop(k)
                    trail.append((b, list(reversed(customers)), a))
                    break
            else:
                raise InternalInvariantError(f"mega tour cannot be closed at depot {end}")
        trails.append(trail)
    return trails


def _trail_depots(trail):
    return {seg[0] for seg in trail}


def _nearest_depot(instance, v, depots):
    return min(depots, key=lambda i: (instance.c[i][v], i))


def _residuals(intermediate, instance):
    load = [0] * instance.m
    for depot, customers in intermediate.routes:
        load[depot] += sum(instance.demand[v] for v in customers)
    for trail in intermediate.trails:
        depots = sorted(_trail_depots(trail))
        for _a, customers, _b in trail:
            for v in customers:
                load[_nearest_depot(instance, v, depots)] += instance.demand[v]
    return [instance.capacity[i] - load[i] for i in range(instance.m)]


def _removal_saving(instance, trail, depot):
    c = instance.c
    saving = 0
    n = len(trail)
    for t in range(n):
        _a, customers, b = trail[t]
        if b == depot:
            nxt = trail[(t + 1) % n][1]
            last, first = customers[-1], nxt[0]
            saving += c[last][depot] + c[depot][first] - c[last][first]
    return saving


def _remove_depot(trail, depot):
    k = next(t for t, seg in enumerate(trail) if seg[0] != depot)
    rotated = trail[k:] + trail[:k]
    merged = []
    cur = rotated[0]
    for seg in rotated[1:]:
        if cur[2] == depot:
            cur = (cur[0], cur[1] + seg[1], seg[2])
        else:
            merged.append(cur)
            cur = seg
    merged.append(cur)
    return merged


def split_mega_tours(intermediate, instance):
    """
    Reduce every mega trail to a single depot, then cut it into routes.

    The depot with the smallest residual capacity goes first (ties to the
    lower index); with uncapacitated depots the one saving the most travel
    cost goes first.
    """
    uncapacitated = instance.uncapacitated_depots
    while intermediate.trails:
        trail = intermediate.trails[0]
        depots = sorted(_trail_depots(trail))
        if len(depots) == 1:
            intermediate.trails.pop(0)
            intermediate.routes.extend((a, customers) for a, customers, _b in trail)
            continue
        if uncapacitated:
            victim = max(depots, key=lambda i: (_removal_saving(instance, trail, i), -i))
        else:
            residual = _residuals(intermediate, instance)
            victim = min(depots, key=lambda i: (residual[i], i))
        intermediate.trails[0] = _remove_depot(trail, victim)
    return intermediate


def _best_opening(c, cycle, p, q):
    """Cheapest way to open `cycle` and splice it between `p` and `q`."""
    best = None
    size = len(cycle)
    for t in range(size):
        end, start = cycle[t], cycle[(t + 1) % size]
        removed = c[end][start]
        forward = c[p][start] + c[end][q] - c[p][q] - removed
        backward = c[p][end] + c[start][q] - c[p][q] - removed
        if best is None or forward < best[0]:
            best = (forward, t, False)
        if backward < best[0]:
            best = (backward, t, True)
    return best


def _opened_path(cycle, t, reverse):
    size = len(cycle)
    path = [cycle[(t + 1 + k) % size] for k in range(size)]
    return list(reversed(path)) if reverse else path


def _rescue_route(instance, cycle):
    c = instance.c
    depot = min(
        range(instance.m),
        key=lambda i: (instance.opening[i] + 2 * min(c[i][v] for v in cycle), i),
    )
    _delta, t, reverse = _best_opening(c, cycle, depot, depot)
    return depot, _opened_path(cycle, t, reverse)


def eliminate_subtours(intermediate, lists, instance):
    """
    Splice each depot-less subtour into a route at its cheapest reconnection.

    Candidate route edges touch a granular neighbor of the subtour; all route
    edges are tried when none does.
    """
    c = instance.c
    routes = [(d, list(customers)) for d, customers in intermediate.routes]

    for cycle in intermediate.subtours:
        if not routes:
            routes.append(_rescue_route(instance, cycle))
            continue

        position = {}
        for r, (_d, customers) in enumerate(routes):
            for k, v in enumerate(customers):
                position[v] = (r, k)

        candidates = set()
        for x in cycle:
            for v in lists[x]:
                if v in position:
                    r, k = position[v]
                    candidates.add((r, k))
                    candidates.add((r, k + 1))
        if not candidates:
            candidates = {(r, e) for r, (_d, cs) in enumerate(routes) for e in range(len(cs) + 1)}

        best = None
        for r, e in sorted(candidates):
            depot, customers = routes[r]
            seq = [depot, *customers, depot]
            delta, t, reverse = _best_opening(c, cycle, seq[e], seq[e + 1])
            if best is None or delta < best[0]:
                best = (delta, r, e, t, reverse)

        _delta, r, e, t, reverse = best
        depot, customers = routes[r]
        routes[r] = (depot, customers[:e] + _opened_path(cycle, t, reverse) + customers[e:])

    return Solution.from_sequences(instance, routes)


def mdeax(parent_a, parent_b, beta, rng, instance, lists):
    """
    Recombine two parents into at most `beta` offspring.

    Offspring are structurally valid but may break capacity limits. Offspring
    equal to either parent are dropped, so identical parents yield none.
    """
    if parent_a.instance is not instance or parent_b.instance is not instance:
        raise HgampError("parents must belong to the given instance")

    edges_a, edges_b = extend_with_dummy_loops(parent_a, parent_b)
    joint = JointGraph.build(edges_a, edges_b)
    if not len(joint):
        return []

    cycles = partition_ab_cycles(joint, rng)
    esets = group_esets(cycles, beta, rng, depots=range(instance.m))

    base_label = LABEL_A if rng.random() < 0.5 else LABEL_B
    base_edges = solution_edges(parent_a if base_label == LABEL_A else parent_b)

    offspring = []
    for eset in esets:
        intermediate = decompose(apply_eset(base_edges, eset, base_label), instance)
        split_mega_tours(intermediate, instance)
        child = eliminate_subtours(intermediate, lists, instance)
        if broken_pairs_distance(child, parent_a) and broken_pairs_distance(child, parent_b):
            offspring.append(child)
        else:
            LOG.debug("dropping offspring identical to a parent")
    return offspring
