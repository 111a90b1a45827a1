"""Compact Lie algebras given by structure constants in a Q-orthonormal basis.

With Q the identity matrix, ad-invariance of Q is the same as total
antisymmetry of ``C[i, j, k] = Q([e_i, e_j], e_k)``.  Subspaces are stored as
matrices with orthonormal columns; containment and equality are decided by
the largest principal-angle sine.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    AntisymmetryViolation,
    DimensionMismatch,
    JacobiViolation,
    NotNested,
    NotSubalgebra,
)

DEFAULT_TOL = 1e-9


class LieAlgebra:
    __slots__ = ("structure", "tol", "name", "_ad")

    def __init__(self, structure, tol=DEFAULT_TOL, name=""):
        self.structure = np.asarray(structure, dtype=float)
        self.tol = float(tol)
        self.name = name
        # ad(e_i)[k, j] = C[i, j, k]
        self._ad = np.ascontiguousarray(self.structure.transpose(0, 2, 1))

    @property
    def dim(self):
        return self.structure.shape[0]

    @property
    def ad_basis(self):
        return self._ad

    def bracket(self, x, y):
        return np.einsum("i,j,ijk->k", x, y, self.structure)

    def ad(self, x):
        return np.tensordot(np.asarray(x, dtype=float), self._ad, axes=(0, 0))

    def brackets(self, U, V):
        """All brackets [u_a, v_b] of columns, as an (n, a*b) matrix."""
        out = np.einsum("ia,jb,ijk->kab", U, V, self.structure, optimize=True)
        return out.reshape(self.dim, -1)

    def full(self, name="g"):
        return Subalgebra(np.eye(self.dim), self, name=name)

    def zero(self, name="0"):
        return Subalgebra(np.zeros((self.dim, 0)), self, name=name)

    def __repr__(self):
        return f"LieAlgebra(name={self.name!r}, dim={self.dim})"


# ---------------------------------------------------------------- subspaces

def orthonormal_span(vectors, tol=DEFAULT_TOL):
    """Orthonormal basis (columns) of the column span, dropping directions below ``tol``."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    n = vectors.shape[0]
    if vectors.shape[1] == 0:
        return np.zeros((n, 0))
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    return u[:, :rank]


def projector(basis):
    return basis @ basis.T


def max_sine(U, V):
    """Largest principal-angle sine of span(U) relative to span(V) (0 when U ⊆ V)."""
    if U.shape[1] == 0:
        return 0.0
    resid = U - V @ (V.T @ U)
    return float(np.linalg.norm(resid, 2))


def subspace_contains(V, U, tol=DEFAULT_TOL):
    """True iff span(U) ⊆ span(V) within ``tol``."""
    return max_sine(U, V) <= tol


def subspace_equal(U, V, tol=DEFAULT_TOL):
    return U.shape[1] == V.shape[1] and max_sine(U, V) <= tol


def orthogonal_complement(basis, within=None, tol=DEFAULT_TOL):
    """Orthonormal basis of ``within ⊖ span(basis)`` (``within`` defaults to the whole space)."""
    n = basis.shape[0]
    W = np.eye(n) if within is None else within
    resid = W - basis @ (basis.T @ W)
    return orthonormal_span(resid, tol)


# ------------------------------------------------------------- subalgebras

class Subalgebra:
    __slots__ = ("basis", "parent", "name")

    def __init__(self, basis, parent, name=""):
        self.basis = np.asarray(basis, dtype=float).reshape(parent.dim, -1)
        self.parent = parent
        self.name = name

    @classmethod
    def span(cls, parent, vectors, name="", tol=None):
        """Orthonormalize ``vectors`` and certify bracket closure."""
        tol = parent.tol if tol is None else tol
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        if vectors.shape[0] != parent.dim:
            raise DimensionMismatch(f"vectors have length {vectors.shape[0]}, algebra has dim {parent.dim}")
        basis = orthonormal_span(vectors, tol)
        if not _closed(parent, basis, tol):
            raise NotSubalgebra(f"span {name or ''} is not closed under the bracket")
        return cls(basis, parent, name)

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return projector(self.basis)

    def complement(self):
        return orthogonal_complement(self.basis, tol=self.parent.tol)

    def leq(self, other, tol=None):
        tol = self.parent.tol if tol is None else tol
        return self.dim <= other.dim and subspace_contains(other.basis, self.basis, tol)

    def lt(self, other, tol=None):
        return self.dim < other.dim and self.leq(other, tol)

    def same(self, other, tol=None):
        tol = self.parent.tol if tol is None else tol
        return subspace_equal(self.basis, other.basis, tol)

    def is_full(self):
        return self.dim == self.parent.dim

    def renamed(self, name):
        return Subalgebra(self.basis, self.parent, name)

    def __repr__(self):
        return f"Subalgebra({self.name!r}, dim={self.dim})"


def _closed(g, basis, tol):
    if basis.shape[1] < 2:
        return True
    br = g.brackets(basis, basis)
    resid = br - basis @ (basis.T @ br)
    return float(np.max(np.abs(resid), initial=0.0)) <= tol * max(1.0, float(np.max(np.abs(br), initial=0.0)))


# -------------------------------------------------------------- operations

def validate_algebra(C, tol=DEFAULT_TOL, name=""):
    """Return a :class:`LieAlgebra` after checking antisymmetry and the Jacobi identity."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 3 or not (C.shape[0] == C.shape[1] == C.shape[2]):
        raise DimensionMismatch(f"structure tensor must be cubic, got shape {C.shape}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if C.shape[0] == 0:
        raise DimensionMismatch("algebra must have positive dimension")

    anti = np.abs(C + C.transpose(1, 0, 2))
    if anti.max() > tol:
        raise AntisymmetryViolation(np.unravel_index(anti.argmax(), anti.shape), anti.max())
    total = np.abs(C + C.transpose(0, 2, 1))
    if total.max() > tol:
        raise AntisymmetryViolation(np.unravel_index(total.argmax(), total.shape), total.max(),
                                    kind="total antisymmetry (ad-invariance of Q)")

    # J[i,j,k,l] = ([[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j])_l
    J = np.einsum("ijm,mkl->ijkl", C, C, optimize=True)
    J = J + J.transpose(1, 2, 0, 3) + J.transpose(2, 0, 1, 3)
    worst = np.abs(J).max(axis=3)
    if worst.max() > tol:
        raise JacobiViolation(np.unravel_index(worst.argmax(), worst.shape), worst.max())
    return LieAlgebra(C, tol=tol, name=name)


def killing_form(g):
    """B[i, j] = tr(ad e_i ad e_j)."""
    return np.einsum("ilk,jkl->ij", g.structure, g.structure, optimize=True)


def restricted_ad(l):
    """Matrices of ad_l(z_i) acting on l, in the orthonormal basis of l."""
    B = l.basis
    ads = np.tensordot(B.T, l.parent.ad_basis, axes=(1, 0))  # (d, n, n)
    return np.einsum("ai,dij,jb->dab", B.T, ads, B, optimize=True)


def killing_form_of(l):
    """Killing form of the subalgebra l itself, in its basis."""
    if l.dim == 0:
        return np.zeros((0, 0))
    M = restricted_ad(l)
    return np.einsum("iab,jba->ij", M, M, optimize=True)


def is_subalgebra(g, V, tol=None):
    tol = g.tol if tol is None else tol
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != g.dim:
        raise DimensionMismatch(f"subspace vectors have length {V.shape[0]}, algebra has dim {g.dim}")
    return _closed(g, orthonormal_span(V, tol), tol)


def closure(g, vectors, tol=None, name=""):
    """Smallest subalgebra containing the given vectors."""
    tol = g.tol if tol is None else tol
    basis = orthonormal_span(vectors, tol)
    while True:
        if basis.shape[1] < 2:
            return Subalgebra(basis, g, name)
        grown = orthonormal_span(np.hstack([basis, g.brackets(basis, basis)]), tol)
        if grown.shape[1] == basis.shape[1]:
            return Subalgebra(basis, g, name)
        basis = grown


def sup_subalgebra(k, l, name=""):
    if k.parent is not l.parent:
        raise DimensionMismatch("subalgebras belong to different algebras")
    return closure(k.parent, np.hstack([k.basis, l.basis]), name=name)


def commutant(l, name=""):
    g = l.parent
    if l.dim < 2:
        return g.zero(name)
    return closure(g, g.brackets(l.basis, l.basis), name=name)


def _require_nested(h, j, tol):
    if not h.leq(j, tol):
        raise NotNested(f"{h.name or 'h'} is not contained in {j.name or 'subalgebra'}")


def is_toral(h, j, tol=None):
    """True iff [j, j] ⊆ h."""
    tol = j.parent.tol if tol is None else tol
    _require_nested(h, j, tol)
    if j.dim < 2:
        return True
    br = j.parent.brackets(j.basis, j.basis)
    resid = br - h.basis @ (h.basis.T @ br)
    return float(np.abs(resid).max()) <= tol


def is_almost_semisimple(h, l, tol=None):
    """True iff l = [l, l] + h."""
    tol = l.parent.tol if tol is None else tol
    _require_nested(h, l, tol)
    gens = np.hstack([h.basis, l.parent.brackets(l.basis, l.basis)]) if l.dim >= 2 else h.basis
    span = orthonormal_span(gens, tol)
    return subspace_equal(span, l.basis, tol)


def is_invariant(V, generators, tol=DEFAULT_TOL):
    """True iff every generator maps span(V) into itself."""
    V = orthonormal_span(V, tol)
    for G in generators:
        GV = np.asarray(G) @ V
        if np.abs(GV - V @ (V.T @ GV)).max(initial=0.0) > tol:
            return False
    return True


@dataclass(frozen=True)
class CasimirProfile:
    c: tuple
    commutant_dim: int


def casimir_operator(l):
    """C = -Σ ad_l(z_i)^2 on l for an orthonormal frame z_i of l."""
    M = restricted_ad(l)
    return -np.einsum("iab,ibc->ac", M, M, optimize=True)


def casimir_invariants(l, r_max=None, tol=None):
    """c_r = trace of the induced Casimir on the r-th exterior power of l."""
    tol = l.parent.tol if tol is None else tol
    d = l.dim
    r_max = d if r_max is None else min(int(r_max), d)
    if d == 0:
        return CasimirProfile((), 0)
    eig = np.linalg.eigvalsh(casimir_operator(l))
    # C is positive semidefinite; eigenvalues at noise level are exact zeros
    eig = np.where(eig > tol * max(1.0, float(eig.max())), eig, 0.0)
    # on ∧^r the trace is the r-th elementary symmetric polynomial of the spectrum
    coeffs = np.poly(eig)
    c = tuple(float((-1) ** r * coeffs[r]) for r in range(1, r_max + 1))
    dims = [r for r, value in enumerate(c, start=1) if value > tol]
    return CasimirProfile(c, max(dims) if dims else 0)
