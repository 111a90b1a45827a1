"""Built-in algebras and catalogs, constructed from matrix Lie algebras.

Every matrix algebra uses the invariant form Q(X, Y) = -2 Re tr(XY), which makes
-(i/2)σ_k an orthonormal basis of su(2) with [e_1, e_2] = e_3.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .lattice import Catalog
from .lie_core import DEFAULT_TOL, Subalgebra, validate_algebra


def form_q(X, Y):
    return -2.0 * np.real(np.trace(X @ Y))


class MatrixAlgebra:
    """A real Lie algebra of complex matrices with a Q-orthonormal basis."""

    def __init__(self, spanning, name, tol=DEFAULT_TOL):
        spanning = [np.asarray(X, dtype=complex) for X in spanning]
        gram = np.array([[form_q(X, Y) for Y in spanning] for X in spanning])
        if np.allclose(gram, np.eye(len(spanning)), atol=1e-14):
            coeffs = np.eye(len(spanning))
        else:
            w, V = np.linalg.eigh(gram)
            keep = w > 1e-10 * max(1.0, w.max())
            coeffs = V[:, keep] / np.sqrt(w[keep])
        self.basis = [sum(c * X for c, X in zip(col, spanning)) for col in coeffs.T]
        n = len(self.basis)
        C = np.zeros((n, n, n))
        for i in range(n):
            for j in range(i + 1, n):
                br = self.basis[i] @ self.basis[j] - self.basis[j] @ self.basis[i]
                row = self.coords(br)
                C[i, j] = row
                C[j, i] = -row
        C[np.abs(C) < 1e-14] = 0.0
        self.algebra = validate_algebra(C, tol=tol, name=name)

    def coords(self, Y):
        return np.array([form_q(Y, E) for E in self.basis])

    def sub(self, mats, name):
        vecs = np.column_stack([self.coords(np.asarray(M, dtype=complex)) for M in mats])
        return Subalgebra.span(self.algebra, vecs, name=name)


# ------------------------------------------------------------ matrix bases

def unitary_basis(n):
    out = []
    for a in range(n):
        E = np.zeros((n, n), complex)
        E[a, a] = 1j
        out.append(E)
        for b in range(a + 1, n):
            R = np.zeros((n, n), complex)
            R[a, b], R[b, a] = 1, -1
            S = np.zeros((n, n), complex)
            S[a, b] = S[b, a] = 1j
            out += [R, S]
    return out


def special_unitary_basis(n):
    out = [X for X in unitary_basis(n) if abs(np.trace(X)) < 1e-12]
    for a in range(n - 1):
        E = np.zeros((n, n), complex)
        E[a, a], E[a + 1, a + 1] = 1j, -1j
        out.append(E)
    return out


def embed_block(X, size, offset):
    M = np.zeros((size, size), complex)
    k = X.shape[0]
    M[offset:offset + k, offset:offset + k] = X
    return M


def pauli_su2():
    s1 = np.array([[0, 1], [1, 0]], complex)
    s2 = np.array([[0, -1j], [1j, 0]])
    s3 = np.array([[1, 0], [0, -1]], complex)
    return [-0.5j * s for s in (s1, s2, s3)]


def su2_power(p):
    """su(2)^p as block-diagonal 2p x 2p matrices; the basis keeps the ε constants per factor."""
    return [embed_block(E, 2 * p, 2 * f) for f in range(p) for E in pauli_su2()]


# ---------------------------------------------------------------- presets

@dataclass
class Preset:
    name: str
    catalog: Catalog
    description: str
    notes: list = field(default_factory=list)

    @property
    def algebra(self):
        return self.catalog.algebra

    @property
    def h(self):
        return self.catalog.h


def _su2():
    ma = MatrixAlgebra(pauli_su2(), "su2")
    g = ma.algebra
    t = Subalgebra.span(g, np.eye(3)[:, [2]], name="t")
    cat = Catalog(g, g.zero("h"), [t], name="su2")
    return Preset("su2", cat, "SU(2) with trivial isotropy; one toral line")


def _su2xsu2_diag():
    ma = MatrixAlgebra(su2_power(2), "su2xsu2")
    g = ma.algebra
    diag = np.vstack([np.eye(3), np.eye(3)]) / np.sqrt(2)
    h = Subalgebra.span(g, diag, name="diag")
    cat = Catalog(g, h, [], name="su2xsu2_diag")
    return Preset("su2xsu2_diag", cat, "SU(2)xSU(2)/ΔSU(2), isotropy irreducible (round S^3)")


def _su2_cubed():
    ma = MatrixAlgebra(su2_power(3), "su2_cubed")
    g = ma.algebra
    I = np.eye(9)
    factors = {f: I[:, 3 * f:3 * f + 3] for f in range(3)}
    items = [Subalgebra.span(g, factors[f], name=f"s{f + 1}") for f in range(3)]
    for a, b in combinations(range(3), 2):
        items.append(Subalgebra.span(g, np.hstack([factors[a], factors[b]]), name=f"s{a + 1}{b + 1}"))
    cat = Catalog(g, g.zero("h"), items, labels=[it.name for it in items], name="su2_cubed")
    return Preset("su2_cubed", cat, "SU(2)^3 with trivial isotropy; factors and pairwise sums")


def _su3_flag():
    ma = MatrixAlgebra(special_unitary_basis(3), "su3")
    g = ma.algebra
    torus = []
    for a in range(2):
        E = np.zeros((3, 3), complex)
        E[a, a], E[a + 1, a + 1] = 1j, -1j
        torus.append(E)
    h = ma.sub(torus, "t2")
    items = []
    for a, b in combinations(range(3), 2):
        R = np.zeros((3, 3), complex)
        R[a, b], R[b, a] = 1, -1
        S = np.zeros((3, 3), complex)
        S[a, b] = S[b, a] = 1j
        items.append(ma.sub(torus + [R, S], f"u2_{a + 1}{b + 1}"))
    labels = [it.name for it in items]
    cat = Catalog(g, h, items, labels=labels, name="su3_flag")
    return Preset("su3_flag", cat, "SU(3)/T^2 (full flag manifold); the three root u(2)'s",
                  notes=["no toral H-subalgebras exist: every subalgebra strictly containing a maximal torus contains a root space"])


def _su2modT_squared():
    ma = MatrixAlgebra(su2_power(2), "su2xsu2")
    g = ma.algebra
    I = np.eye(6)
    h = Subalgebra.span(g, I[:, [2, 5]], name="t+t")
    k1 = Subalgebra.span(g, I[:, [0, 1, 2, 5]], name="su2+t")
    k2 = Subalgebra.span(g, I[:, [2, 3, 4, 5]], name="t+su2")
    cat = Catalog(g, h, [k1, k2], labels=["su2+t", "t+su2"], name="su2modT_squared")
    return Preset("su2modT_squared", cat, "(SU(2)/T^1)^2 = S^2 x S^2")


def _su2xsu2_toral():
    ma = MatrixAlgebra(su2_power(2), "su2xsu2")
    g = ma.algebra
    I = np.eye(6)
    columns = {
        "s1": [0, 1, 2],
        "t1": [2],
        "t2": [5],
        "t1+t2": [2, 5],
        "s1+t2": [0, 1, 2, 5],
    }
    items = [Subalgebra.span(g, I[:, cols], name=name) for name, cols in columns.items()]
    cat = Catalog(g, g.zero("h"), items, labels=list(columns), name="su2xsu2_toral")
    return Preset("su2xsu2_toral", cat, "SU(2)xSU(2) with trivial isotropy; toral lines and their sups")


def sym2_embedding():
    """Isometry from Sym^2 C^3 into C^3 ⊗ C^3, ordered as V_0 ⊕ V_1 ⊕ V_2 for v = e3 ⊗ e3."""
    order = [(2, 2), (0, 2), (1, 2), (0, 0), (0, 1), (1, 1)]
    S = np.zeros((9, 6), complex)
    for col, (a, b) in enumerate(order):
        if a == b:
            S[3 * a + a, col] = 1
        else:
            S[3 * a + b, col] = S[3 * b + a, col] = 1 / np.sqrt(2)
    return S


def _example_2_8_p2():
    ma = MatrixAlgebra(unitary_basis(6), "u6")
    g = ma.algebra
    S = sym2_embedding()
    I3 = np.eye(3)

    def rho(X):
        return S.conj().T @ (np.kron(X, I3) + np.kron(I3, X)) @ S

    u3 = unitary_basis(3)
    u2 = [X for X in u3 if np.allclose(X[2, :], 0) and np.allclose(X[:, 2], 0)]
    h_mats = [rho(X) for X in u2]
    h = ma.sub(h_mats, "h")
    k = ma.sub([rho(X) for X in u3], "rho(u3)")
    phase = np.diag([1, 1j, 1j, 1, 1, 1])
    k_conj = ma.sub([phase @ rho(X) @ phase.conj().T for X in u3], "Ad(t)rho(u3)")
    su_v1 = [embed_block(X, 6, 1) for X in special_unitary_basis(2)]
    l1 = ma.sub(h_mats + su_v1, "h+su(V1)")
    j1 = ma.sub(h_mats + [1j * np.eye(6)], "h+z(g)")
    items = [k, k_conj, l1, j1]
    labels = ["[rho(u3)]", "[rho(u3)]", "[h+su(V1)]", "[h+z(g)]"]
    cat = Catalog(g, h, items, labels=labels, name="example_2_8_p2")
    return Preset("example_2_8_p2", cat,
                  "U(6)/H with H = Sym^2(U(3)) ∩ U(5), dim H = 4; Sym^2 of u(3) is maximal and minimal nontoral",
                  notes=["rho(u3) and its conjugate by a centralizer torus element are declared equivalent"])


_BUILDERS = {
    "su2": _su2,
    "su2xsu2_diag": _su2xsu2_diag,
    "su2_cubed": _su2_cubed,
    "su3_flag": _su3_flag,
    "su2modT_squared": _su2modT_squared,
    "example_2_8_p2": _example_2_8_p2,
    "su2xsu2_toral": _su2xsu2_toral,
}

PRESET_NAMES = tuple(_BUILDERS)
_CACHE = {}


def load_preset(name):
    if name not in _BUILDERS:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
