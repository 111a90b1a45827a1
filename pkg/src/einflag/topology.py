"""Flag complexes of catalogs, reduced homology, joins, and the orbit graphs."""

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import EmptyFilter, InconsistentEquivalence, NoRepresentativeFlag, ValidationError
from .lattice import classify_family, minimal_nontoral_indices, nontoral_indices
from .lie_core import casimir_invariants, sup_subalgebra


# -------------------------------------------------------------- complexes

class SimplicialComplex:
    """Finite abstract simplicial complex given by its facets."""

    __slots__ = ("vertices", "facets", "_faces")

    def __init__(self, vertices, facets):
        self.vertices = list(vertices)
        known = set(self.vertices)
        cleaned = []
        for f in facets:
            f = frozenset(f)
            if not f:
                continue
            if not f <= known:
                raise ValidationError(f"facet {sorted(map(str, f))} uses unknown vertices")
            cleaned.append(f)
        # keep only maximal faces
        self.facets = [f for f in set(cleaned) if not any(f < g for g in cleaned)]
        self._faces = None

    def faces(self):
        """All nonempty faces grouped by dimension."""
        if self._faces is None:
            out = {}
            seen = set()
            for f in self.facets:
                for k in range(1, len(f) + 1):
                    for sub in combinations(sorted(f, key=_key), k):
                        if sub not in seen:
                            seen.add(sub)
                            out.setdefault(k - 1, []).append(sub)
            self._faces = {d: sorted(v, key=lambda s: tuple(map(_key, s))) for d, v in out.items()}
        return self._faces

    @property
    def dimension(self):
        return max((len(f) - 1 for f in self.facets), default=-1)

    def is_empty(self):
        return not self.facets

    def __repr__(self):
        return f"SimplicialComplex({len(self.vertices)} vertices, {len(self.facets)} facets)"


def _key(v):
    return (type(v).__name__, str(v))


def flag_complex(cat, exclude_g=True, indices=None):
    """Order complex of the catalog (restricted to ``indices`` when given)."""
    idx = list(range(len(cat.items))) if indices is None else list(indices)
    if exclude_g:
        idx = [i for i in idx if not cat.items[i].is_full()]
    leq = cat.leq_matrix()
    chains = []

    def grow(chain, pool):
        extended = False
        for j in pool:
            if all(leq[j, c] or leq[c, j] for c in chain) and j not in chain:
                grow(chain + [j], [p for p in pool if p != j and (leq[p, j] or leq[j, p])])
                extended = True
        if not extended:
            chains.append(frozenset(chain))

    for i in idx:
        grow([i], [j for j in idx if j != i and (leq[i, j] or leq[j, i])])
    return SimplicialComplex(idx, chains)


def clique_complex(vertices, edges):
    """Flag complex of a graph: simplices are cliques."""
    adj = {v: set() for v in vertices}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    cliques = []

    def expand(r, p, x):  # Bron–Kerbosch without pivoting; graphs here are tiny
        if not p and not x:
            cliques.append(frozenset(r))
            return
        for v in list(p):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(vertices), set())
    return SimplicialComplex(vertices, [c for c in cliques if c])


# --------------------------------------------------------------- homology

def _boundary_rows(K, d):
    """Boundary ∂_d : C_d → C_{d-1} as a list of {column: ±1} rows indexed by d-faces."""
    faces = K.faces()
    lower = {f: i for i, f in enumerate(faces.get(d - 1, []))}
    rows = []
    for f in faces.get(d, []):
        rows.append({lower[f[:j] + f[j + 1:]]: (-1) ** j for j in range(len(f))})
    return rows


def _rank_q(rows, ncols):
    """Exact rank over the rationals by Gaussian elimination on Fractions."""
    mat = [[Fraction(r.get(c, 0)) for c in range(ncols)] for r in rows]
    rank, col = 0, 0
    nrows = len(mat)
    while rank < nrows and col < ncols:
        piv = next((i for i in range(rank, nrows) if mat[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        p = mat[rank][col]
        for i in range(rank + 1, nrows):
            if mat[i][col] != 0:
                factor = mat[i][col] / p
                row_i, row_r = mat[i], mat[rank]
                for c in range(col, ncols):
                    row_i[c] -= factor * row_r[c]
        rank += 1
        col += 1
    return rank


def _rank_z2(rows, ncols):
    basis = {}
    rank = 0
    for r in rows:
        v = 0
        for c, val in r.items():
            if val % 2:
                v |= 1 << c
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def reduced_homology(K, field="Q"):
    """Reduced Betti numbers [b̃_0, ..., b̃_dim]; an empty complex gives [] (b̃_{-1} = 1)."""
    if field not in ("Q", "Z2"):
        raise ValidationError("field must be 'Q' or 'Z2'")
    if K.is_empty():
        return []
    rank_fn = _rank_q if field == "Q" else _rank_z2
    faces = K.faces()
    top = K.dimension
    ranks = {0: 1}  # augmentation C_0 → field
    for d in range(1, top + 1):
        ranks[d] = rank_fn(_boundary_rows(K, d), len(faces.get(d - 1, [])))
    ranks[top + 1] = 0
    return [len(faces.get(d, [])) - ranks[d] - ranks[d + 1] for d in range(top + 1)]


def homology_degree(betti, q):
    """b̃_q with the convention b̃_{-1}(∅) = 1."""
    if not betti:
        return 1 if q == -1 else 0
    return betti[q] if 0 <= q < len(betti) else 0


def is_acyclic(betti):
    return bool(betti) and all(b == 0 for b in betti)


# ----------------------------------------------------------------- joins

def sphere_boundary(p, tag="s"):
    """S^{p-2} as the boundary of the (p-1)-simplex on p vertices."""
    verts = [(tag, i) for i in range(p)]
    return SimplicialComplex(verts, [frozenset(c) for c in combinations(verts, p - 1)] if p > 1 else [])


def join_complex(Ks, with_sphere_factor=False):
    """Simplicial join; with the sphere factor S^{p-2} for p = len(Ks) ≥ 2 factors appended."""
    Ks = list(Ks)
    if with_sphere_factor:
        if len(Ks) < 2:
            raise ValidationError("the sphere factor needs at least two complexes")
        Ks = Ks + [sphere_boundary(len(Ks), tag="sphere")]
    verts, facets = [], [frozenset()]
    for k, K in enumerate(Ks):
        tagged = [frozenset((k, v) for v in f) for f in K.facets] or [frozenset()]
        verts += [(k, v) for v in K.vertices]
        facets = [a | b for a in facets for b in tagged]
    return SimplicialComplex(verts, [f for f in facets if f])


def kunneth_prediction(b1, b2):
    """Reduced Betti numbers of a join over a field: b̃_q = Σ_{i+j=q-1} b̃_i b̃_j (degrees ≥ -1)."""
    d1, d2 = len(b1), len(b2)
    top = d1 + d2
    pred = []
    for q in range(0, top + 1):
        pred.append(sum(homology_degree(b1, i) * homology_degree(b2, q - 1 - i) for i in range(-1, q + 1)))
    while pred and pred[-1] == 0:
        pred.pop()
    return pred


def trim(betti):
    out = list(betti)
    while out and out[-1] == 0:
        out.pop()
    return out


# ---------------------------------------------------------- certificates

def cone_certificate(cat, indices=None):
    """Index of a greatest proper item (the complex is then a cone), else None."""
    idx = [i for i in (cat.proper_indices() if indices is None else indices) if not cat.items[i].is_full()]
    leq = cat.leq_matrix()
    for i in idx:
        if all(leq[j, i] for j in idx):
            return i
    return None


# ---------------------------------------------------------------- graphs

@dataclass
class Graph:
    vertices: list
    edges: list
    members: dict = field(default_factory=dict)  # class label -> catalog indices

    def components(self):
        n = len(self.vertices)
        if n == 0:
            return 0, np.zeros(0, dtype=int)
        pos = {v: i for i, v in enumerate(self.vertices)}
        rows = [pos[a] for a, b in self.edges]
        cols = [pos[b] for a, b in self.edges]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(adj, directed=False)

    @property
    def connected(self):
        return self.components()[0] <= 1


def _intersection_dim(k, l, tol):
    if k.dim == 0 or l.dim == 0:
        return 0
    s = np.linalg.svd(k.basis.T @ l.basis, compute_uv=False)
    return int(np.sum(s > 1 - tol))


def fingerprint(cat, i, digits=6):
    """Orbit invariant: (dim, Casimir profile, multiset of sup/intersection dims with the others)."""
    item = cat.items[i]
    prof = casimir_invariants(item)
    c = tuple(round(x, digits) + 0.0 for x in prof.c)
    rel = Counter()
    for j, other in enumerate(cat.items):
        if j == i:
            continue
        rel[(sup_subalgebra(item, other).dim, _intersection_dim(item, other, 1e-6))] += 1
    return (item.dim, c, prof.commutant_dim, tuple(sorted(rel.items())))


def equivalence_labels(cat, equivalence=None, check=True):
    """Class label of each item: explicit map, catalog labels, or fingerprints."""
    n = len(cat.items)
    if equivalence is not None:
        labels = [equivalence[i] if isinstance(equivalence, (list, tuple)) else
                  equivalence.get(i, equivalence.get(cat.items[i].name, cat.items[i].name)) for i in range(n)]
    elif cat.labels is not None:
        labels = list(cat.labels)
    else:
        prints = [fingerprint(cat, i) for i in range(n)]
        ids = {}
        labels = [f"[{ids.setdefault(p, cat.items[i].name)}]" for i, p in enumerate(prints)]
        return labels
    if check:
        seen = {}
        for i, lab in enumerate(labels):
            if lab in seen:
                j = seen[lab]
                if cat.items[i].dim != cat.items[j].dim or fingerprint(cat, i) != fingerprint(cat, j):
                    raise InconsistentEquivalence(
                        f"items {cat.items[j].name!r} and {cat.items[i].name!r} share label {lab!r} "
                        "but have different invariant fingerprints")
            else:
                seen[lab] = i
    return labels


def graph_vertex_indices(cat, min_only=False):
    """Items feeding the graph: almost semisimple (type 1*) or, for the min graph, type 2."""
    out = []
    for i in cat.proper_indices():
        flags = classify_family(cat, i)
        if (flags["type2"] if min_only else flags["type1star"]):
            out.append(i)
    return out


def build_graph_BWZ(cat, equivalence=None, min_only=False):
    labels = equivalence_labels(cat, equivalence)
    idx = graph_vertex_indices(cat, min_only)
    members = {}
    for i in idx:
        members.setdefault(labels[i], []).append(i)
    edges = set()
    for a, b in combinations(idx, 2):
        if cat.lt(a, b) or cat.lt(b, a):
            la, lb = labels[a], labels[b]
            if la != lb:
                edges.add(tuple(sorted((la, lb))))
    return Graph(list(members), sorted(edges), members)


@dataclass(frozen=True)
class Verdict:
    exists: bool
    reason: str


def graph_criterion(graph):
    if not graph.vertices:
        return Verdict(False, "inconclusive: the graph is empty")
    ncomp = graph.components()[0]
    if ncomp > 1:
        return Verdict(True, f"exists: graph has {ncomp} connected components")
    return Verdict(False, "inconclusive: graph is connected")


def project_q(cat, graph, equivalence=None):
    """Vertex map item → class; checks every clique of the graph is realized by a catalog flag."""
    labels = equivalence_labels(cat, equivalence, check=False)
    K = clique_complex(graph.vertices, graph.edges)
    realized = {}
    for faces in K.faces().values():
        for clique in faces:
            classes = sorted(clique, key=lambda c: -cat.items[graph.members[c][0]].dim)
            chain = _realize(cat, [graph.members[c] for c in classes])
            if chain is None:
                raise NoRepresentativeFlag(clique)
            realized[clique] = chain
    vertex_map = {i: labels[i] for lab in graph.members for i in graph.members[lab]}
    return {"vertex_map": vertex_map, "realizations": realized, "complex": K}


def _realize(cat, pools):
    def search(k, chain):
        if k == len(pools):
            return chain
        for i in pools[k]:
            if not chain or cat.lt(i, chain[-1]):
                found = search(k + 1, chain + [i])
                if found is not None:
                    return found
        return None

    return search(0, [])


# -------------------------------------------------------------- export

def to_facet_lines(K, names=None):
    """One facet per line, vertices separated by spaces."""
    names = names or {}
    lines = []
    for f in sorted(K.facets, key=lambda s: sorted(map(_key, s))):
        lines.append(" ".join(sorted(str(names.get(v, v)).replace(" ", "_") for v in f)))
    return "\n".join(lines) + ("\n" if lines else "")


def from_facet_lines(text):
    facets = [frozenset(line.split()) for line in text.splitlines() if line.strip()]
    verts = sorted(set().union(*facets)) if facets else []
    return SimplicialComplex(verts, facets)


def nontoral_complex(cat):
    """Flag complex of the nontoral proper items of a sup-closed catalog."""
    return flag_complex(cat, exclude_g=True, indices=nontoral_indices(cat))


def minimal_complex(cat):
    try:
        idx = minimal_nontoral_indices(cat)
    except EmptyFilter:
        idx = []
    return flag_complex(cat, exclude_g=True, indices=idx)
