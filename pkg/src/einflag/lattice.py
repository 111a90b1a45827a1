"""Finite catalogs of invariant subalgebras and their semilattice structure."""

from itertools import combinations

import numpy as np

from .errors import AllToral, CheckViolation, EmptyFilter, NotNested, ValidationError
from .lie_core import (
    Subalgebra,
    is_almost_semisimple,
    is_invariant,
    is_toral,
    sup_subalgebra,
)


def adjoint_generators(h):
    """ad(x) for an orthonormal basis x of h."""
    g = h.parent
    return [g.ad(h.basis[:, i]) for i in range(h.dim)]


class Catalog:
    """A finite list of subalgebras strictly containing ``h``, possibly including g itself."""

    __slots__ = ("algebra", "h", "items", "extra_generators", "labels", "name", "_cache")

    def __init__(self, algebra, h, items, extra_generators=(), labels=None, name="", check=True):
        self.algebra = algebra
        self.h = h
        self.items = tuple(items)
        self.extra_generators = tuple(np.asarray(G, dtype=float) for G in extra_generators)
        self.labels = None if labels is None else tuple(labels)
        self.name = name
        self._cache = {}
        if self.labels is not None and len(self.labels) != len(self.items):
            raise ValidationError("labels must match catalog items one to one")
        if check:
            self._check()

    def _check(self):
        tol = self.algebra.tol
        gens = self.generators
        for item in self.items:
            if not self.h.lt(item, tol):
                raise NotNested(f"catalog item {item.name!r} does not strictly contain h")
            if not is_invariant(item.basis, gens, tol * 10):
                raise ValidationError(f"catalog item {item.name!r} is not invariant under the generators")

    @property
    def generators(self):
        if "gens" not in self._cache:
            self._cache["gens"] = adjoint_generators(self.h) + list(self.extra_generators)
        return self._cache["gens"]

    @property
    def includes_g(self):
        return any(item.is_full() for item in self.items)

    @property
    def g_index(self):
        for i, item in enumerate(self.items):
            if item.is_full():
                return i
        return None

    def __len__(self):
        return len(self.items)

    def proper_indices(self):
        return [i for i, item in enumerate(self.items) if not item.is_full()]

    def index_of(self, sub):
        for i, item in enumerate(self.items):
            if item.same(sub):
                return i
        return None

    def leq_matrix(self):
        """leq[i, j] is True iff items[i] ⊆ items[j]."""
        if "leq" not in self._cache:
            n = len(self.items)
            leq = np.zeros((n, n), dtype=bool)
            for i in range(n):
                for j in range(n):
                    leq[i, j] = i == j or self.items[i].leq(self.items[j])
            self._cache["leq"] = leq
        return self._cache["leq"]

    def lt(self, i, j):
        return i != j and bool(self.leq_matrix()[i, j])

    def sup_index(self, i, j):
        """Index of sup(items[i], items[j]); the catalog must be sup-closed."""
        table = self._cache.setdefault("sup", {})
        key = (min(i, j), max(i, j))
        if key not in table:
            if i == j:
                table[key] = i
            else:
                s = sup_subalgebra(self.items[i], self.items[j])
                idx = self.index_of(s)
                if idx is None:
                    raise CheckViolation(f"catalog is not sup-closed: sup({self.items[i].name}, {self.items[j].name})")
                table[key] = idx
        return table[key]

    def label(self, i):
        return self.labels[i] if self.labels is not None else None

    def with_items(self, items, labels=None, name=None):
        return Catalog(self.algebra, self.h, items, self.extra_generators, labels,
                       self.name if name is None else name, check=False)

    def __repr__(self):
        return f"Catalog({self.name!r}, items={[it.name for it in self.items]})"


class OrderIdeal(frozenset):
    """Downward-closed set of catalog indices."""


def close_under_sup(cat):
    g = cat.algebra
    items = list(cat.items)
    labels = list(cat.labels) if cat.labels is not None else None
    if not any(it.is_full() for it in items):
        items.append(g.full("g"))
        if labels is not None:
            labels.append("g")
    changed = True
    while changed:
        changed = False
        for a, b in combinations(range(len(items)), 2):
            s = sup_subalgebra(items[a], items[b])
            if any(s.same(it) for it in items):
                continue
            s.name = f"sup({items[a].name},{items[b].name})"
            items.append(s)
            if labels is not None:
                labels.append(s.name)
            changed = True
            break
    return cat.with_items(items, labels)


def toral_mask(cat):
    mask = cat._cache.get("toral")
    if mask is None:
        mask = tuple((not it.is_full()) and is_toral(cat.h, it) for it in cat.items)
        cat._cache["toral"] = mask
    return mask


def toral_ideal(cat):
    g = cat.algebra
    if is_toral(cat.h, g.full()):
        raise AllToral("[g, g] lies in h: every subalgebra is toral")
    mask = toral_mask(cat)
    ideal = OrderIdeal(i for i, t in enumerate(mask) if t)
    leq = cat.leq_matrix()
    for j in ideal:
        for i in range(len(cat.items)):
            if leq[i, j] and i not in ideal:
                raise CheckViolation("toral items are not downward closed")
    return ideal


def nontoral_indices(cat):
    mask = toral_mask(cat)
    return [i for i in cat.proper_indices() if not mask[i]]


def minimal_nontoral_indices(cat):
    nt = nontoral_indices(cat)
    if not nt:
        raise EmptyFilter("catalog has no nontoral proper items")
    return [i for i in nt if not any(cat.lt(j, i) for j in nt)]


def minimal_nontoral(cat):
    return [cat.items[i] for i in minimal_nontoral_indices(cat)]


def k_min_semilattice(cat):
    idx = minimal_nontoral_indices(cat)
    labels = [cat.labels[i] for i in idx] if cat.labels is not None else None
    return close_under_sup(cat.with_items([cat.items[i] for i in idx], labels))


def classify_family(cat, index):
    item = cat.items[index]
    if item.is_full():
        return {"type1": False, "type1star": False, "type2": False, "toral": False}
    toral = toral_mask(cat)[index]
    type1 = not toral
    type1star = type1 and is_almost_semisimple(cat.h, item)
    type2 = False
    if type1:
        minimal = [cat.items[i] for i in minimal_nontoral_indices(cat) if cat.leq_matrix()[i, index]]
        if minimal:
            acc = minimal[0]
            for m in minimal[1:]:
                acc = sup_subalgebra(acc, m)
            type2 = acc.same(item)
    return {"type1": type1, "type1star": type1star, "type2": type2, "toral": toral}


def classification_table(cat):
    rows = []
    for i, item in enumerate(cat.items):
        row = {"index": i, "name": item.name, "dim": item.dim}
        row.update(classify_family(cat, i))
        rows.append(row)
    return rows


def subalgebra_from_vectors(algebra, vectors, name):
    return Subalgebra.span(algebra, vectors, name=name)
