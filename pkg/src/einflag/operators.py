"""Filtering symmetric operators and the sets built from them.

Operators are plain symmetric numpy arrays acting on the whole algebra g.  An
operator A is filtering when its eigenvalue filtration satisfies
[F_a, F_b] ⊆ F_{a+b}; three independent tests are provided (eigen-triples,
growth of the conjugated bracket, and signs of Gram minors of the derived
action on the bracket tensor).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, null_space

from .errors import (
    BadPartition,
    DegeneratePoint,
    FullAlgebra,
    KernelNotSubalgebra,
    NonConvergence,
)
from .lie_core import DEFAULT_TOL, Subalgebra, _closed, orthogonal_complement, orthonormal_span


# ------------------------------------------------------------------ basics

def chi_bar(g, k):
    """(1/dim(g/k)) times the orthogonal projector onto the complement of k."""
    if k.dim >= g.dim:
        raise FullAlgebra("chi_bar is undefined for k = g")
    return (np.eye(g.dim) - k.projector) / (g.dim - k.dim)


def symmetrize(A):
    return 0.5 * (A + A.T)


def frob(A):
    return float(np.linalg.norm(A))


def commutes_with(A, generators, tol=DEFAULT_TOL):
    return all(np.abs(A @ G - G @ A).max(initial=0.0) <= tol for G in generators)


@dataclass
class FiltrationProfile:
    levels: np.ndarray
    blocks: list  # orthonormal eigenvectors for each level
    spaces: list = field(default_factory=list)  # cumulative spans F_{λ_i}

    def space_at(self, a):
        """F_a = span of eigenvectors with eigenvalue ≤ a."""
        chosen = [b for lvl, b in zip(self.levels, self.blocks) if lvl <= a]
        if not chosen:
            return np.zeros((self.blocks[0].shape[0], 0))
        return np.hstack(chosen)


def _cluster(w, tol):
    """Group sorted eigenvalues whose consecutive gaps are ≤ tol."""
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            groups.append((start, i))
            start = i
    return groups


def filtration_of(A, tol=DEFAULT_TOL):
    A = symmetrize(np.asarray(A, dtype=float))
    w, V = np.linalg.eigh(A)
    thresh = tol * max(1.0, float(np.abs(w).max(initial=0.0)))
    groups = _cluster(w, thresh)
    levels = np.array([w[a:b].mean() for a, b in groups])
    blocks = [V[:, a:b] for a, b in groups]
    spaces = [V[:, :b] for _, b in groups]
    return FiltrationProfile(levels, blocks, spaces)


def _clustered_eigh(A, tol):
    A = symmetrize(np.asarray(A, dtype=float))
    w, V = np.linalg.eigh(A)
    thresh = tol * max(1.0, float(np.abs(w).max(initial=0.0)))
    for a, b in _cluster(w, thresh):
        w[a:b] = w[a:b].mean()
    return w, V


def rotate_structure(g, V):
    """Structure constants in the orthonormal basis given by the columns of V."""
    T = np.tensordot(V, g.structure, axes=(0, 0))  # [i, b, c]
    T = np.tensordot(T, V, axes=(1, 0))  # [i, c, j]
    return np.tensordot(T, V, axes=(1, 0))  # [i, j, k]


# ----------------------------------------------------------- filtering tests

def filtering_margin(g, A, tol=DEFAULT_TOL):
    """max of λ_k - λ_i - λ_j over eigen-triples with a structure constant above tol."""
    w, V = _clustered_eigh(A, tol)
    Ct = rotate_structure(g, V)
    mask = np.abs(Ct) > tol
    if not mask.any():
        return -math.inf
    excess = w[None, None, :] - w[:, None, None] - w[None, :, None]
    return float(excess[mask].max())


def is_filtering(g, A, tol=DEFAULT_TOL):
    return filtering_margin(g, A, tol) <= tol


def conjugated_bracket_norms(g, A, t_grid):
    """Frobenius norms of the tensor (X, Y) ↦ e^{tA}[e^{-tA}X, e^{-tA}Y] over the grid."""
    w, U = np.linalg.eigh(symmetrize(np.asarray(A, dtype=float)))
    out = []
    for t in t_grid:
        E, Einv = (U * np.exp(t * w)) @ U.T, (U * np.exp(-t * w)) @ U.T
        T = np.einsum("ai,bj,abc,kc->ijk", Einv, Einv, g.structure, E, optimize=True)
        out.append(float(np.linalg.norm(T)))
    return np.array(out)


def is_filtering_by_limit(g, A, t_grid=None, tol=DEFAULT_TOL):
    """True iff the conjugated bracket norm never increases along the grid (relative tol)."""
    if t_grid is None:
        t_grid = np.linspace(0.0, 40.0, 41)
    norms = conjugated_bracket_norms(g, A, t_grid)
    if norms[0] == 0.0:
        return True
    steps = np.diff(norms)
    return bool(np.all(steps <= tol * norms[:-1] + 1e-300))


def derived_action(g, A, T):
    """(-A).T = T(A·,·) + T(·,A·) - A T(·,·) on a tensor T[i, j, k] = T(e_i, e_j)_k."""
    return (np.einsum("pi,pjk->ijk", A, T) + np.einsum("pj,ipk->ijk", A, T)
            - np.einsum("kp,ijp->ijk", A, T))


@dataclass
class MinorSequence:
    """Leading principal minors D_1..D_K of the Gram matrix a_ij = (-A.v_i, v_j).

    Minors underflow quickly, so each is kept as (sign, log|D_i|); ``D`` holds
    the float values (possibly flushed to zero).
    """

    signs: list
    log_abs: list
    E: float
    dim_V: int
    D: list = field(default_factory=list)

    def inequalities(self, tol=DEFAULT_TOL):
        """Indices i where D_i ≥ E^{i+1} D_{i+1} ≥ 0 fails."""
        bad = []
        K = len(self.signs)
        for i in range(K):
            if self.signs[i] < 0:
                bad.append(i + 1)
                continue
            if i + 1 < K and self.signs[i + 1] > 0:
                if self.signs[i] == 0:
                    bad.append(i + 1)
                elif self.log_abs[i] < (i + 2) * math.log(self.E) + self.log_abs[i + 1] - tol:
                    bad.append(i + 1)
        return bad

    def certifies_filtering(self, tol=DEFAULT_TOL):
        return not self.inequalities(tol)


def minor_sequence(g, A, K=None, tol=DEFAULT_TOL):
    """Gram minors of the chain v_1 = -A.c, v_{i+1} = -A.v_i.

    The Krylov chain is orthonormalized by Lanczos; with T the resulting
    tridiagonal matrix and r_kk = |v_1| β_1⋯β_{k-1},
    D_i = (r_11⋯r_ii)^2 det T_i.  The chain is truncated at dim(V) + 2.
    """
    A = symmetrize(np.asarray(A, dtype=float))
    n = g.dim
    c = g.structure
    c_norm2 = float(np.sum(c * c))
    normA = float(np.abs(np.linalg.eigvalsh(A)).max(initial=0.0))
    spectrum = np.linalg.eigvalsh(A)
    bound = 2.0 if spectrum.min() >= -tol and spectrum.max() <= 1 + tol else 3.0 * max(normA, 1.0)
    scale = max(normA, 1e-300)
    limit = n * n * n if K is None else int(K)

    def apply(x):
        return derived_action(g, A, x.reshape(n, n, n)).ravel()

    v1 = apply(c.ravel())
    beta0 = float(np.linalg.norm(v1))
    alphas, betas = [], []
    if beta0 > tol * max(1.0, math.sqrt(c_norm2)) * scale:
        Q = [v1 / beta0]
        while len(Q) <= limit:
            w = apply(Q[-1])
            alphas.append(float(Q[-1] @ w))
            Qm = np.array(Q)
            w = w - Qm.T @ (Qm @ w)
            w = w - Qm.T @ (Qm @ w)
            b = float(np.linalg.norm(w))
            if b <= tol * scale or len(Q) == limit:
                break
            betas.append(b)
            Q.append(w / b)
    m = len(alphas)
    K_out = m + 2 if K is None else int(K)

    signs, log_abs = [], []
    log_r, pivot_sign, log_det = 0.0, 1, 0.0
    prev_pivot = None
    for i in range(K_out):
        if i >= m:
            signs.append(0)
            log_abs.append(-math.inf)
            continue
        log_r += math.log(beta0) + sum(math.log(b) for b in betas[:i])  # log r_{i+1,i+1}
        pivot = alphas[i] if prev_pivot is None else alphas[i] - betas[i - 1] ** 2 / prev_pivot
        if abs(pivot) <= tol * scale:
            pivot = 0.0
        prev_pivot = pivot if pivot != 0.0 else tol * scale * 1e-3
        if pivot == 0.0:
            signs.append(0)
            log_abs.append(-math.inf)
            pivot_sign, log_det = 0, -math.inf
            continue
        pivot_sign *= 1 if pivot > 0 else -1
        log_det += math.log(abs(pivot))
        signs.append(pivot_sign)
        log_abs.append(2.0 * log_r + log_det)

    E = min((bound ** (2 * i + 1) * c_norm2) ** (-1.0 / i) for i in range(1, max(K_out, 1) + 1)) if c_norm2 > 0 else 1.0
    D = [s * math.exp(la) if s != 0 and la > -700 else 0.0 for s, la in zip(signs, log_abs)]
    return MinorSequence(signs, log_abs, E, m, D)


def is_filtering_by_minors(g, A, tol=DEFAULT_TOL):
    return minor_sequence(g, A, tol=tol).certifies_filtering(tol)


# ------------------------------------------------------------ membership

def in_F_plus(g, A, tol=DEFAULT_TOL):
    A = np.asarray(A, dtype=float)
    if np.abs(A - A.T).max() > tol:
        return False
    w = np.linalg.eigvalsh(symmetrize(A))
    if w.min() < -tol or abs(w.sum() - 1.0) > tol:
        return False
    return is_filtering(g, A, tol)


def kernel_basis(A, tol=DEFAULT_TOL):
    w, V = np.linalg.eigh(symmetrize(np.asarray(A, dtype=float)))
    return V[:, np.abs(w) <= tol * max(1.0, float(np.abs(w).max(initial=0.0)))]


def kernel_subalgebra(g, A, tol=DEFAULT_TOL):
    K = kernel_basis(A, tol)
    if not _closed(g, K, tol * 10):
        raise KernelNotSubalgebra("kernel of a W-candidate is not a subalgebra (tolerance too loose?)")
    return Subalgebra(K, g, name="ker")


def in_W(g, h, generators, A, tol=DEFAULT_TOL, return_kernel=False):
    ok = in_F_plus(g, A, tol) and commutes_with(A, generators, tol)
    ker = None
    if ok:
        if h.dim and np.abs(A @ h.basis).max() > tol:
            ok = False
        else:
            K = kernel_basis(A, tol)
            ok = h.dim < K.shape[1] < g.dim
            if ok:
                ker = kernel_subalgebra(g, A, tol)
    return (ok, ker) if return_kernel else ok


def in_cell_D(g, h, generators, k, A, draft=True, tol=DEFAULT_TOL):
    A = np.asarray(A, dtype=float)
    if np.abs(A @ k.basis).max(initial=0.0) > tol:
        return False
    if not draft:
        return in_W(g, h, generators, A, tol)
    if np.abs(A - A.T).max() > tol:
        return False
    w = np.linalg.eigvalsh(symmetrize(A))
    if w.min() < -tol or abs(w.sum() - 1.0) > tol:
        return False
    ad_k = [g.ad(k.basis[:, i]) for i in range(k.dim)]
    return commutes_with(A, list(generators) + ad_k, tol)


# --------------------------------------------------------- sphere models

def to_quotient(A, h):
    """Matrix of A on g/h, in an orthonormal basis of the complement of h."""
    M = orthogonal_complement(h.basis)
    return M.T @ A @ M, M


def from_quotient(A_m, M):
    return M @ A_m @ M.T


def model_to_sphere(A, tol=DEFAULT_TOL):
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    r2 = float(np.sum(A * A)) - 1.0 / n
    if r2 <= tol:
        raise DegeneratePoint("the centre identity/n has no image on the sphere")
    return (A - np.eye(n) / n) / math.sqrt(r2)


def model_from_sphere(v, tol=DEFAULT_TOL):
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    if abs(np.trace(v)) > tol or abs(np.linalg.norm(v) - 1.0) > 10 * tol:
        raise DegeneratePoint("sphere points must be traceless with unit norm")
    lam = float(np.linalg.eigvalsh(symmetrize(v)).min())
    if lam >= -tol:
        raise DegeneratePoint("sphere point has no negative eigenvalue")
    return (np.eye(n) - v / lam) / n


# ------------------------------------------------------ invariant operators

def _tall_null_space(M, rcond):
    # a thin SVD suffices when rows outnumber columns, and avoids forming the huge left factor
    if M.shape[0] < M.shape[1]:
        return null_space(M, rcond=rcond)
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > rcond * s.max())) if s.size and s.max() > 0 else 0
    return vt[rank:].T


def equivariant_symmetric_basis(support, operators, tol=DEFAULT_TOL):
    """Orthonormal basis of symmetric S = U X U^T (U = support columns) commuting with every operator."""
    n, d = support.shape
    iu = np.triu_indices(d)
    basis = []
    for a, b in zip(*iu):
        X = np.zeros((d, d))
        if a == b:
            X[a, a] = 1.0
        else:
            X[a, b] = X[b, a] = 1 / math.sqrt(2)
        basis.append(support @ X @ support.T)
    if not basis:
        return []
    B = np.array(basis)  # (m, n, n)
    if operators:
        rows = [np.einsum("mij,jk->mik", B, G) - np.einsum("ij,mjk->mik", G, B) for G in operators]
        Mc = np.concatenate([r.reshape(len(basis), -1) for r in rows], axis=1).T
        N = _tall_null_space(Mc, tol)
    else:
        N = np.eye(len(basis))
    return [np.tensordot(col, B, axes=(0, 0)) for col in N.T]


def traceless_part(mats, tol=DEFAULT_TOL):
    """Orthonormal basis of the traceless matrices in span(mats)."""
    if not mats:
        return []
    flat = np.array([M.ravel() for M in mats]).T
    n = mats[0].shape[0]
    traces = np.array([np.trace(M) for M in mats])
    if np.abs(traces).max() <= tol:
        Q = orthonormal_span(flat, tol)
    else:
        keep = null_space(traces[None, :], rcond=tol)
        Q = orthonormal_span(flat @ keep, tol)
    return [Q[:, i].reshape(n, n) for i in range(Q.shape[1])]


def cell_tangent_basis(g, k, generators, tol=DEFAULT_TOL):
    """Traceless directions of the cell D[k] at its centre."""
    U = k.complement()
    ad_k = [g.ad(k.basis[:, i]) for i in range(k.dim)]
    return traceless_part(equivariant_symmetric_basis(U, list(generators) + ad_k, tol), tol)


# ---------------------------------------------------------- star property

def omega_radius(codim):
    return 1.0 / (codim * math.sqrt(5.0 - 1.0 / codim))


@dataclass(frozen=True)
class StarScale:
    t: float | None
    unbounded: bool
    on_omega: bool

    def as_report(self):
        return {"t_A": "unbounded" if self.unbounded else self.t, "on_omega": self.on_omega}


def star_scale_limit(g, k, A, tol=DEFAULT_TOL, t_cap=1e6, max_iter=200):
    """sup{t : t(A - χ̄^k) + χ̄^k ∈ F_+}, located by bracketing and bisection."""
    center = chi_bar(g, k)
    D = np.asarray(A, dtype=float) - center
    dist = frob(D)
    codim = g.dim - k.dim
    on_omega = abs(dist - omega_radius(codim)) <= max(tol, 1e-12) * 10
    if dist <= tol:
        return StarScale(None, True, False)

    def inside(t):
        return in_F_plus(g, center + t * D, tol)

    lo, hi = 0.0, 1.0
    iters = 0
    while inside(hi):
        lo, hi = hi, 2 * hi
        iters += 1
        if hi > t_cap or iters > max_iter:
            raise NonConvergence("ray does not leave F_+ within the cap")
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
        iters += 1
        if iters > max_iter:
            raise NonConvergence("bisection budget exhausted")
    return StarScale(lo, False, on_omega)


def ray_exit_time(g, k, D, tol=DEFAULT_TOL, draft=False):
    """Exact exit time of χ̄^k + tD from the cell (draft) or the star X[k].

    D must be a traceless direction of the cell.  The eigenvectors of the ray
    do not move, so every filtering inequality is affine in t.
    """
    codim = g.dim - k.dim
    U = k.complement()
    w, S = np.linalg.eigh(symmetrize(U.T @ D @ U))
    bounds = [1.0 / (codim * -x) for x in w if x < -tol]
    if not draft:
        V = np.hstack([k.basis, U @ S])
        alpha = np.concatenate([np.zeros(k.dim), np.full(U.shape[1], 1.0 / codim)])
        delta = np.concatenate([np.zeros(k.dim), w])
        Ct = rotate_structure(g, V)
        mask = np.abs(Ct) > tol
        a0 = alpha[None, None, :] - alpha[:, None, None] - alpha[None, :, None]
        d0 = delta[None, None, :] - delta[:, None, None] - delta[None, :, None]
        sel = mask & (d0 > tol) & (a0 < -tol)
        if sel.any():
            bounds.append(float((-a0[sel] / d0[sel]).min()))
    return min(bounds) if bounds else math.inf


def random_direction(basis, rng):
    if not basis:
        return None
    coeffs = rng.standard_normal(len(basis))
    D = np.tensordot(coeffs, np.array(basis), axes=(0, 0))
    return D / frob(D)


def sample_cell(g, k, generators, rng, draft=False, tangent=None, tol=DEFAULT_TOL):
    """A random point of D[k] (draft) or X[k]: uniform along a random ray from the centre."""
    center = chi_bar(g, k)
    tangent = cell_tangent_basis(g, k, generators, tol) if tangent is None else tangent
    D = random_direction(tangent, rng)
    if D is None:
        return center
    t_exit = ray_exit_time(g, k, D, tol, draft=draft)
    return center + rng.uniform(0.0, t_exit) * D


# ------------------------------------------------------------- BWZ hull

def in_bwz_hull(g, h, A, partition, tol=DEFAULT_TOL):
    """Membership in the hull built from a partition [(a_1, b_1), ..., (a_{k-1}, b_{k-1})]."""
    n = g.dim - h.dim
    prev = 0.0
    for i, (a, b) in enumerate(partition):
        if not (prev < a < b) or not 2 * a < b:
            raise BadPartition(f"interval {i + 1} = [{a}, {b}] breaks 0 = b_0 < a_1 < b_1 < ... and 2 a_i < b_i")
        prev = b
    if partition and abs(partition[-1][1] - 1.0 / n) > tol:
        raise BadPartition("the last right end must equal 1/dim(g/h)")
    w, V = np.linalg.eigh(symmetrize(np.asarray(A, dtype=float)))
    for a, b in partition:
        if np.any((w >= a - tol) & (w <= b + tol)):
            continue
        F_a = V[:, w <= a]
        F_2a = V[:, w <= 2 * a]
        if F_a.shape[1] >= 2:
            br = g.brackets(F_a, F_a)
            if np.abs(br - F_2a @ (F_2a.T @ br)).max() > tol:
                return False
    return True


# ------------------------------------------------------- random operators

def random_automorphism(g, rng, scale=1.0):
    """exp(ad X) for a random X: an orthogonal automorphism of g."""
    return expm(g.ad(scale * rng.standard_normal(g.dim)))


def random_trace_one(n, rng):
    """Random nonnegative symmetric trace-1 operator with a Dirichlet spectrum."""
    w = rng.dirichlet(np.ones(n))
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    return symmetrize(Q @ np.diag(w) @ Q.T)


def random_chain(g, rng, seeds=()):
    """A random strictly increasing chain of subalgebras grown from random lines."""
    from .lie_core import closure

    chain = [g.zero()]
    pool = list(seeds)
    while chain[-1].dim < g.dim:
        if pool and rng.random() < 0.5:
            cand = pool.pop(int(rng.integers(len(pool))))
            nxt = closure(g, np.hstack([chain[-1].basis, cand.basis]))
        else:
            nxt = closure(g, np.hstack([chain[-1].basis, rng.standard_normal((g.dim, 1))]))
        if nxt.dim > chain[-1].dim:
            chain.append(nxt)
    return chain[:-1]


def random_filtering_operator(g, rng, seeds=()):
    """Positive combination of χ̄ over a random chain, conjugated by a random automorphism."""
    chain = random_chain(g, rng, seeds)
    weights = rng.dirichlet(np.ones(len(chain)))
    A = sum(w * chi_bar(g, k) for w, k in zip(weights, chain))
    P = random_automorphism(g, rng)
    return symmetrize(P @ A @ P.T)


# ------------------------------------------------------- star sampling

@dataclass
class StarReport:
    star: str
    codim: int
    tangent_dim: int
    samples: int = 0
    not_filtering: int = 0
    min_t: float = math.inf
    bisection_gap: float = 0.0
    ball_samples: int = 0
    ball_nonmembers: int = 0

    @property
    def vacuous(self):
        return self.tangent_dim == 0

    @property
    def ok(self):
        return self.not_filtering == 0 and self.ball_nonmembers == 0 and self.min_t >= 1.0 - 1e-9


def star_property_check(g, h, generators, k, samples=1000, seed=0, bisect_every=20, tol=DEFAULT_TOL):
    """Ω-sphere points are filtering with t_A ≥ 1, and the small ball around χ̄^k lies in the star."""
    rng = np.random.default_rng(seed)
    codim = g.dim - k.dim
    tangent = cell_tangent_basis(g, k, generators, tol)
    rep = StarReport(k.name, codim, len(tangent))
    if not tangent:
        return rep
    center = chi_bar(g, k)
    radius = omega_radius(codim)
    ball = 1.0 / (3.0 * codim)
    for s in range(samples):
        D = random_direction(tangent, rng)
        A = center + radius * D
        rep.samples += 1
        if not in_F_plus(g, A, tol):
            rep.not_filtering += 1
        t_exit = ray_exit_time(g, k, D, tol)
        t_A = t_exit / radius
        rep.min_t = min(rep.min_t, float(t_A))
        if bisect_every and s % bisect_every == 0 and math.isfinite(t_exit):
            scale = star_scale_limit(g, k, A, tol)
            rep.bisection_gap = max(rep.bisection_gap, float(abs(scale.t - t_A) / max(1.0, t_A)))
        rho = ball * rng.uniform() ** (1.0 / len(tangent))
        rep.ball_samples += 1
        if not in_cell_D(g, h, generators, k, center + rho * random_direction(tangent, rng), draft=False, tol=tol):
            rep.ball_nonmembers += 1
    return rep
