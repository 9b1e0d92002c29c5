"""Symbolic diagram engine: enumeration, exact weights, loop/line laws.

Diagrams are labeled multigraphs with quartic internal vertices and labeled
external legs.  For a connected diagram with n external legs and k vertices
the line count is N = n/2 + 2k and the loop count l = k - n/2 + 1; trees
(l = 0) have k = n/2 - 1.  All weights are exact rationals.

The Gaussian background field turns trees with xi-legs into loop diagrams:
every perfect matching of the xi-legs adds a P0 line per pair and a factor
1/beta.  Matching the classical one-loop weights against the brute-force
quantum (Wick) weights fixes beta: tadpole and two-vertex loop require
beta = 1/(2 pi), the triangle requires beta = 1/pi.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
import json


@dataclass(frozen=True)
class ExternalLeg:
    tag: str           # "in", "out", "xi", "ext", "root"
    index: int
    dotted: bool = False


@dataclass(frozen=True)
class Diagram:
    """Multigraph with k quartic vertices and labeled external legs.

    Edge endpoints are ("v", i) for internal vertices and ("e", j) for the
    j-th external leg; every external leg appears in exactly one edge.
    """

    num_vertices: int
    external: tuple    # of ExternalLeg
    edges: tuple       # of (endpoint_a, endpoint_b, label)
    weight: Fraction = Fraction(1)
    beta_power: int = 0

    # -- structure ---------------------------------------------------------

    @property
    def num_external(self):
        return len(self.external)

    @property
    def num_lines(self):
        return len(self.edges)

    def internal_edges(self):
        return [e for e in self.edges
                if e[0][0] == "v" and e[1][0] == "v"]

    def loop_count(self):
        """Cyclomatic number N - (#nodes) + 1 (diagram must be connected)."""
        return self.num_lines - (self.num_vertices + self.num_external) + 1

    def is_connected(self):
        nodes = ([("v", i) for i in range(self.num_vertices)]
                 + [("e", j) for j in range(self.num_external)])
        if not nodes:
            return True
        parent = {u: u for u in nodes}

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        for a, b, _ in self.edges:
            parent[find(a)] = find(b)
        root = find(nodes[0])
        return all(find(u) == root for u in nodes)

    def degrees(self):
        deg = [0] * self.num_vertices
        for a, b, _ in self.edges:
            for p in (a, b):
                if p[0] == "v":
                    deg[p[1]] += 1
        return deg

    def validate(self):
        if any(d != 4 for d in self.degrees()):
            raise ValueError("every internal vertex must have degree 4")
        attach = [0] * self.num_external
        for a, b, _ in self.edges:
            for p in (a, b):
                if p[0] == "e":
                    attach[p[1]] += 1
        if any(c != 1 for c in attach):
            raise ValueError("every external leg must sit on exactly one line")

    # -- canonical form ----------------------------------------------------

    def canonical_key(self, anonymize_external=False, ignore_labels=False):
        """Minimal edge multiset over all internal-vertex permutations.

        With anonymize_external the external legs are reduced to their tags
        (orbit counting); with ignore_labels propagator labels are dropped.
        """
        def leg_key(j):
            leg = self.external[j]
            return (("e", leg.tag, leg.dotted) if anonymize_external
                    else ("e", leg.tag, leg.index, leg.dotted))

        best = None
        for perm in permutations(range(self.num_vertices)):
            edges = []
            for a, b, lab in self.edges:
                pa = ("v", perm[a[1]]) if a[0] == "v" else leg_key(a[1])
                pb = ("v", perm[b[1]]) if b[0] == "v" else leg_key(b[1])
                e = tuple(sorted((pa, pb)))
                edges.append(e if ignore_labels else e + (lab,))
            key = tuple(sorted(edges))
            if best is None or key < best:
                best = key
        return best

    # -- serialization -----------------------------------------------------

    def to_json_dict(self):
        def pt(p):
            return {"kind": p[0], "id": p[1]}
        return {
            "vertices": self.num_vertices,
            "edges": [{"a": pt(a), "b": pt(b), "label": lab}
                      for a, b, lab in self.edges],
            "external": [{"tag": l.tag, "index": l.index, "dotted": l.dotted}
                         for l in self.external],
            "weight": {"num": self.weight.numerator,
                       "den": self.weight.denominator},
            "beta_power": self.beta_power,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def ascii_art(self):
        lines = [f"vertices: {self.num_vertices}   weight: {self.weight}"
                 + (f"   beta^-{self.beta_power}" if self.beta_power else "")]
        for a, b, lab in self.edges:
            def name(p):
                if p[0] == "v":
                    return f"V{p[1]}"
                leg = self.external[p[1]]
                return f"{leg.tag}{leg.index}" + ("*" if leg.dotted else "")
            lines.append(f"  {name(a):>6} ---[{lab}]--- {name(b)}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# enumeration

def _internal_multigraphs(k, m_int):
    """Multiplicity maps over vertex pairs with degrees <= 4 and m_int edges."""
    pairs = [(i, j) for i in range(k) for j in range(i, k)]
    results = []

    def rec(idx, remaining, deg):
        if idx == len(pairs):
            if remaining == 0:
                results.append(dict_of_current())
            return
        i, j = pairs[idx]
        unit = 2 if i == j else 1
        max_m = remaining
        max_m = min(max_m, (4 - deg[i]) // unit if i == j
                    else min(4 - deg[i], 4 - deg[j]))
        for m in range(max_m + 1):
            current.append(m)
            deg[i] += m * unit
            if i != j:
                deg[j] += m
            rec(idx + 1, remaining - m, deg)
            deg[i] -= m * unit
            if i != j:
                deg[j] -= m
            current.pop()

    current = []

    def dict_of_current():
        return {pairs[t]: current[t] for t in range(len(current))
                if current[t] > 0}

    rec(0, m_int, [0] * k)
    return results


def enumerate_diagrams(n, k, tags=None, label="S0"):
    """All connected diagrams with n labeled external legs and k vertices.

    Returns one representative per isomorphism class (internal vertices
    unlabeled, external legs labeled).  Empty when n + 4k is odd or the
    required internal line count (4k - n)/2 is negative.
    """
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if tags is None:
        tags = ["ext"] * n
    legs = tuple(ExternalLeg(tags[j], j) for j in range(n))
    if k == 0:
        if n != 2:
            return []
        d = Diagram(0, legs, ((("e", 0), ("e", 1), label),))
        return [d]
    if (n + 4 * k) % 2 == 1 or 4 * k < n:
        return []
    m_int = (4 * k - n) // 2
    out = {}
    for graph in _internal_multigraphs(k, m_int):
        deg = [0] * k
        for (i, j), m in graph.items():
            deg[i] += m * (2 if i == j else 1)
            if i != j:
                deg[j] += m
        cap = [4 - d for d in deg]

        def assign(leg_idx, cap, chosen):
            if leg_idx == n:
                yield tuple(chosen)
                return
            for v in range(k):
                if cap[v] > 0:
                    cap[v] -= 1
                    chosen.append(v)
                    yield from assign(leg_idx + 1, cap, chosen)
                    chosen.pop()
                    cap[v] += 1

        for attach in assign(0, cap, []):
            edges = []
            for (i, j), m in sorted(graph.items()):
                edges.extend([(("v", i), ("v", j), label)] * m)
            for jleg, v in enumerate(attach):
                edges.append((("e", jleg), ("v", v), label))
            diag = Diagram(k, legs, tuple(edges))
            if not diag.is_connected():
                continue
            key = diag.canonical_key()
            if key not in out:
                out[key] = diag
    diags = sorted(out.values(), key=lambda d: d.canonical_key())
    for d in diags:
        d.validate()
    return diags


def unlabeled_count(diagrams):
    """Number of isomorphism classes when external legs of equal tag are
    interchangeable (orbit counting of the labeled enumeration)."""
    return len({d.canonical_key(anonymize_external=True) for d in diagrams})


def _tree_shapes(leaves):
    """Rooted shapes over a leaf tuple: a leaf, or a vertex with three
    odd-sized subtrees (unordered)."""
    if len(leaves) == 1:
        return [leaves[0]]
    out = []
    for a, b, c in _odd_partitions(leaves):
        for sa in _tree_shapes(a):
            for sb in _tree_shapes(b):
                for sc in _tree_shapes(c):
                    out.append(tuple(sorted((sa, sb, sc), key=repr)))
    return out


def _odd_partitions(items):
    """Unordered partitions of items into three nonempty odd-sized blocks."""
    items = list(items)
    n = len(items)
    first = items[0]
    for na in range(1, n - 1, 2):
        for rest_a in combinations(items[1:], na - 1):
            a = (first,) + rest_a
            remaining = [x for x in items if x not in a]
            m = len(remaining)
            anchor = remaining[0]
            for nb in range(1, m, 2):
                if (m - nb) % 2 == 0:
                    continue
                for rest_b in combinations(remaining[1:], nb - 1):
                    b = (anchor,) + rest_b
                    c = tuple(x for x in remaining if x not in b)
                    if c:
                        yield tuple(sorted(a)), tuple(sorted(b)), c


def enumerate_trees(n, tags=None):
    """Connected trees with n labeled external legs (k = n/2 - 1 vertices).

    Each labeled topology has weight 1 (the quartic 1/4! of the interaction
    cancels against the leg permutations).  Odd n yields an empty list: the
    amplitude vanishes unless n is even.
    """
    if n % 2 == 1 or n < 2:
        return []
    if n > 12:
        raise ValueError("desk-scale bound n <= 12")
    if tags is None:
        tags = ["ext"] * n
    legs = tuple(ExternalLeg(tags[j], j) for j in range(n))
    if n == 2:
        return [Diagram(0, legs, ((("e", 0), ("e", 1), "S0"),))]

    diags = []
    for shape3 in {s: None for s in
                   (tuple(sorted(t, key=repr))
                    for t in _root_triples(tuple(range(1, n))))}:
        edges = []
        counter = [0]

        def build(shape, parent):
            if isinstance(shape, int):
                edges.append((("e", shape), parent, "S0"))
                return
            v = counter[0]
            counter[0] += 1
            me = ("v", v)
            if parent is not None:
                edges.append((me, parent, "S0"))
            for child in shape:
                build(child, me)

        root = ("v", 0)
        counter[0] = 1
        edges.append((("e", 0), root, "S0"))
        for child in shape3:
            build(child, root)
        d = Diagram(counter[0], legs, tuple(edges))
        d.validate()
        diags.append(d)
    return diags


def _root_triples(leaves):
    for a, b, c in _odd_partitions(leaves):
        for sa in _tree_shapes(a):
            for sb in _tree_shapes(b):
                for sc in _tree_shapes(c):
                    yield (sa, sb, sc)


def enumerate_cauchy_trees(order):
    """Rooted retarded trees of the Cauchy expansion at a given order.

    Every edge is a retarded line, there is one root leg, and a tree at
    order n has n vertices and 2n + 1 leaves; the weight counts the ordered
    realizations of the unordered shape (the "+ 3 x" multiplicities).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order > 6:
        raise ValueError("desk-scale bound order <= 6")

    def shapes(m):
        """(shape, multiplicity) with shape = 'leaf' or sorted child triple."""
        if m == 0:
            return [("leaf", 1)]
        out = {}
        for a in range(m):
            for b in range(m - a):
                c = m - 1 - a - b
                for sa, wa in shapes(a):
                    for sb, wb in shapes(b):
                        for sc, wc in shapes(c):
                            key = tuple(sorted((sa, sb, sc), key=repr))
                            out[key] = out.get(key, 0) + wa * wb * wc
        return list(out.items())

    diags = []
    for shape, mult in shapes(order):
        edges = []
        leaf_counter = [0]
        vert_counter = [0]

        def build(sh, parent):
            if sh == "leaf":
                j = leaf_counter[0] + 1
                leaf_counter[0] += 1
                edges.append((("e", j), parent, "Retarded"))
                return
            v = vert_counter[0]
            vert_counter[0] += 1
            me = ("v", v)
            if parent is not None:
                edges.append((me, parent, "Retarded"))
            for child in sh:
                build(child, me)

        if shape == "leaf":
            legs = (ExternalLeg("root", 0), ExternalLeg("ext", 1))
            diags.append(Diagram(0, legs,
                                 ((("e", 0), ("e", 1), "Retarded"),),
                                 Fraction(mult)))
            continue
        root = ("v", 0)
        vert_counter[0] = 1
        edges.append((("e", 0), root, "Retarded"))
        for child in shape:
            build(child, root)
        nleg = leaf_counter[0] + 1
        legs = tuple([ExternalLeg("root", 0)]
                     + [ExternalLeg("ext", j) for j in range(1, nleg)])
        d = Diagram(vert_counter[0], legs, tuple(edges), Fraction(mult))
        d.validate()
        diags.append(d)
    return diags


# ---------------------------------------------------------------------------
# Wick pairings of the background-field legs

def all_pairings(items):
    """Perfect matchings of a list; empty for odd length; (r-1)!! for even."""
    items = list(items)
    if len(items) % 2 == 1:
        return []
    if not items:
        return [()]
    out = []
    first = items[0]
    for t in range(1, len(items)):
        rest = items[1:t] + items[t + 1:]
        for sub in all_pairings(rest):
            out.append(((first, items[t]),) + sub)
    return out


def wick_contract_xi(diagram: Diagram):
    """Sum over pairings of the xi-legs; each pair becomes a P0 line.

    Returns diagrams without xi-legs, weights multiplied by the pairing
    multiplicity and beta_power raised by one per pair; diagrams isomorphic
    after contraction are merged.  An odd number of xi-legs gives [] (the
    Gaussian expectation vanishes).
    """
    xi_pos = [j for j, leg in enumerate(diagram.external) if leg.tag == "xi"]
    if len(xi_pos) % 2 == 1:
        return []
    if not xi_pos:
        return [diagram]
    attach = {}
    kept_edges = []
    for a, b, lab in diagram.edges:
        ends = (a, b)
        xi_ends = [p for p in ends if p[0] == "e" and p[1] in xi_pos]
        if xi_ends:
            other = ends[0] if ends[1] == xi_ends[0] else ends[1]
            attach[xi_ends[0][1]] = other
        else:
            kept_edges.append((a, b, lab))
    keep = [j for j in range(diagram.num_external) if j not in xi_pos]
    remap = {old: new for new, old in enumerate(keep)}
    new_legs = tuple(diagram.external[j] for j in keep)

    def remap_pt(p):
        return ("e", remap[p[1]]) if p[0] == "e" else p

    base_edges = [(remap_pt(a), remap_pt(b), lab) for a, b, lab in kept_edges]
    merged = {}
    for pairing in all_pairings(xi_pos):
        edges = list(base_edges)
        for i, j in pairing:
            edges.append((attach[i], attach[j], "P0"))
        d = Diagram(diagram.num_vertices, new_legs, tuple(edges),
                    diagram.weight,
                    diagram.beta_power + len(pairing))
        key = d.canonical_key()
        if key in merged:
            prev = merged[key]
            merged[key] = Diagram(prev.num_vertices, prev.external,
                                  prev.edges, prev.weight + d.weight,
                                  prev.beta_power)
        else:
            merged[key] = d
    return sorted(merged.values(), key=lambda d: d.canonical_key())


# ---------------------------------------------------------------------------
# brute-force quantum weights

def qft_weight(n, k, topology: Diagram) -> Fraction:
    """Compensated quantum weight of a topology by Wick enumeration.

    Counts perfect matchings of the n external points and 4k vertex slots
    that realize the topology, divided by k! (4!)^k.  Connected trees come
    out exactly 1; the tadpole (n, k) = (2, 1) comes out 1/2.
    """
    if (n + 4 * k) % 2 == 1:
        return Fraction(0)
    if n + 4 * k > 14:
        raise ValueError("enumeration bound n + 4k <= 14 exceeded")
    slots = [("e", j) for j in range(n)]
    for v in range(k):
        slots.extend([("v", v)] * 4)
    target = topology.canonical_key(ignore_labels=True)
    legs = tuple(ExternalLeg(topology.external[j].tag
                             if j < len(topology.external) else "ext", j)
                 for j in range(n))
    count = 0

    def rec(remaining, edges):
        nonlocal count
        if not remaining:
            d = Diagram(k, legs, tuple(edges))
            if (d.is_connected()
                    and d.canonical_key(ignore_labels=True) == target):
                count += 1
            return
        first = remaining[0]
        for t in range(1, len(remaining)):
            edges.append((first, remaining[t], "S0"))
            rec(remaining[1:t] + remaining[t + 1:], edges)
            edges.pop()

    rec(slots, [])
    norm = Fraction(1)
    for i in range(1, k + 1):
        norm *= i
    norm *= Fraction(24) ** k
    return Fraction(count) / norm


# ---------------------------------------------------------------------------
# beta matching

@dataclass
class WeightReport:
    classical_weight: Fraction
    quantum_weight: Fraction
    beta_coeff: Fraction        # beta = beta_coeff / pi; None when unverified
    hbar_power: int
    verified: bool
    note: str = ""


def hbar_power(diagram: Diagram) -> int:
    """Loop/leg power counting k + n/2 (equals n - 1 + l when connected)."""
    return diagram.num_vertices + diagram.num_external // 2


def _loop_cycle_length(diagram: Diagram):
    """Number of vertices on the single loop of a one-loop diagram."""
    p0 = [e for e in diagram.internal_edges() if e[2] == "P0"]
    if len(p0) != 1:
        return None
    a, b, _ = p0[0]
    if a == b:
        return 1
    # shortest internal path between the P0 endpoints avoiding the P0 edge
    adj = {}
    used = [False]
    for e in diagram.internal_edges():
        if e[2] == "P0" and not used[0]:
            used[0] = True
            continue
        u, v, _ = e
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    from collections import deque
    dist = {a: 0}
    q = deque([a])
    while q:
        u = q.popleft()
        for v in adj.get(u, []):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    if b not in dist:
        return None
    return dist[b] + 1


def classical_loop_weight(cycle_length) -> Fraction:
    """Combinatorial weight of the one-loop diagram in the classical
    background-field expansion.

    cycle length 1 (tadpole): three placements of the xi pair on one vertex
    times the vertex 1/6 and one pairing -> 1/2.  Length 2: the underlying
    tree carries factor one.  Length 3: three placements of the P0 line on
    the triangle.
    """
    if cycle_length == 1:
        return Fraction(3, 6)
    if cycle_length == 2:
        return Fraction(1)
    if cycle_length == 3:
        return Fraction(3)
    raise ValueError("unsupported cycle length")


def beta_match(diagram: Diagram) -> WeightReport:
    """Value of beta required for the classical loop to equal the quantum one.

    One loop line P0 is traded for Feynman propagators on the cycle; the
    tadpole is normalized against the brute-force quantum weight 1/2, longer
    cycles against the unit reference weight of the underlying tree.  Cycles
    longer than 3 or multi-loop diagrams are reported unverified.
    """
    l = diagram.loop_count()
    if l < 1:
        raise ValueError("beta_match needs a diagram with at least one loop")
    hp = hbar_power(diagram)
    if l > 1:
        return WeightReport(diagram.weight, Fraction(0), None, hp, False,
                            "multi-loop matching is open")
    r = _loop_cycle_length(diagram)
    if r is None or r > 3:
        return WeightReport(diagram.weight, Fraction(0), None, hp, False,
                            "loop cycle not matched (length > 3 or ambiguous)")
    w_cl = classical_loop_weight(r)
    if r == 1:
        tadpole = enumerate_diagrams(2, 1)[0]
        w_q = qft_weight(2, 1, tadpole)        # = 1/2 by brute force
        coeff = w_cl / (2 * w_q)
    else:
        w_q = Fraction(1)                      # reference tree weight
        coeff = (w_cl / r) / w_q
    return WeightReport(w_cl, w_q, coeff, hp, True)
