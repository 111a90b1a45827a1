"""Flags of catalog subalgebras, their butterflies, and the level retractions.

A flag is a tuple of catalog indices ordered by strictly decreasing
subalgebras.  Every point of the butterfly of a flag (f_1 > ... > f_r) has a
unique form

    x = λ_1 z + Σ_{i≥2} λ_i χ̄^{f_i},   z in the star (or cell) of f_1,

which is recovered blockwise: x is zero on f_r, scalar on each f_m ⊖ f_{m+1},
and λ_1 z + scalar on g ⊖ f_1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EndpointBoundViolated,
    NotAFlag,
    NotInButterfly,
    NotInSimplex,
    StarViolation,
)
from .lie_core import DEFAULT_TOL, orthogonal_complement
from .operators import (
    cell_tangent_basis,
    chi_bar,
    is_filtering,
    random_direction,
    ray_exit_time,
    symmetrize,
)

FINE = "fine"
DRAFT = "draft"


# ------------------------------------------------------------- flag order

def make_flag(cat, indices):
    """Sort indices by decreasing subalgebra and check the chain is strict."""
    idx = sorted(set(indices), key=lambda i: -cat.items[i].dim)
    if not idx:
        raise NotAFlag("empty flag")
    for a, b in zip(idx, idx[1:]):
        if not cat.lt(b, a):
            raise NotAFlag(f"{cat.items[b].name} is not strictly inside {cat.items[a].name}")
    return tuple(idx)


def flag_max(flag):
    return flag[0]


def flag_leq(cat, phi, psi):
    """True iff psi ≥ phi in the flag order."""
    top = phi[0]
    if not (psi[0] == top or cat.lt(top, psi[0])):
        return False
    members = set(phi)
    return all(l in members or cat.lt(top, l) for l in psi)


def flag_product(cat, phi, psi):
    """Least upper bound of two flags: the flag of the butterfly intersection."""
    a, b = set(phi), set(psi)
    out = (a & b) | {f for f in phi if cat.lt(psi[0], f)} | {f for f in psi if cat.lt(phi[0], f)}
    out.add(cat.sup_index(phi[0], psi[0]))
    return make_flag(cat, out)


def all_flags(cat):
    """Every nonempty chain of catalog items."""
    n = len(cat.items)
    leq = cat.leq_matrix()
    order = sorted(range(n), key=lambda i: -cat.items[i].dim)
    flags = []

    def extend(chain):
        flags.append(tuple(chain))
        last = chain[-1]
        for j in order:
            if j != last and leq[j, last] and cat.items[j].dim < cat.items[last].dim:
                extend(chain + [j])

    for i in order:
        extend([i])
    return flags


def height(cat, flag):
    return cat.items[flag[0]].dim


def kind(cat, flag):
    if len(flag) == 1:
        return 1
    return 2 if cat.items[flag[0]].is_full() else 3


@dataclass(frozen=True)
class Butterfly:
    flag: tuple
    version: str = FINE


@dataclass
class ButterflyPoint:
    """x = λ_1 z + Σ λ_i χ̄^{f_i}; ``z`` is None when λ_1 = 0 or f_1 = g."""

    flag: tuple
    lambdas: np.ndarray
    z: np.ndarray | None

    @property
    def kappa(self):
        return float(self.lambdas[0])


# ------------------------------------------------------------ the space

class ButterflySpace:
    """Cached geometry of a sup-closed catalog for butterfly computations."""

    def __init__(self, cat, version=FINE, tol=DEFAULT_TOL):
        if version not in (FINE, DRAFT):
            raise ValueError(f"version must be {FINE!r} or {DRAFT!r}")
        self.cat = cat
        self.g = cat.algebra
        self.version = version
        self.tol = tol
        self._chi, self._comp, self._tangent, self._ads = {}, {}, {}, {}
        self._flags = None
        self._between = {}

    # cached pieces
    def chi(self, i):
        if i not in self._chi:
            self._chi[i] = chi_bar(self.g, self.cat.items[i])
        return self._chi[i]

    def codim(self, i):
        return self.g.dim - self.cat.items[i].dim

    def complement(self, i):
        if i not in self._comp:
            self._comp[i] = self.cat.items[i].complement()
        return self._comp[i]

    def tangent(self, i):
        if i not in self._tangent:
            self._tangent[i] = cell_tangent_basis(self.g, self.cat.items[i], self.cat.generators, self.tol)
        return self._tangent[i]

    def ads(self, i):
        if i not in self._ads:
            k = self.cat.items[i]
            self._ads[i] = [self.g.ad(k.basis[:, a]) for a in range(k.dim)]
        return self._ads[i]

    def between(self, upper, lower):
        """Orthonormal basis of items[upper] ⊖ items[lower]."""
        key = (upper, lower)
        if key not in self._between:
            self._between[key] = orthogonal_complement(self.cat.items[lower].basis,
                                                       within=self.cat.items[upper].basis, tol=self.tol)
        return self._between[key]

    @property
    def flags(self):
        if self._flags is None:
            self._flags = all_flags(self.cat)
        return self._flags

    def nonempty(self, flag):
        return flag != (self.cat.g_index,)

    def height(self, flag):
        return height(self.cat, flag)

    # membership
    def star_cone_member(self, i, y):
        """y ∈ λ·B[(items[i])] for some λ ≥ 0, with y supported on the complement of items[i]."""
        tol = self.tol
        if np.abs(y - y.T).max(initial=0.0) > tol:
            return False
        if np.linalg.eigvalsh(symmetrize(y)).min(initial=0.0) < -tol:
            return False
        for G in list(self.cat.generators) + self.ads(i):
            if np.abs(y @ G - G @ y).max(initial=0.0) > tol:
                return False
        if self.version == FINE:
            return is_filtering(self.g, y, tol)
        return True

    def decompose(self, A, flag):
        """The ButterflyPoint of A in B[flag], or None if A is not a member."""
        cat, tol = self.cat, self.tol
        if not self.nonempty(flag):
            return None
        A = np.asarray(A, dtype=float)
        if abs(np.trace(A) - 1.0) > tol:
            return None
        r = len(flag)
        top_is_g = cat.items[flag[0]].is_full()
        # a[m] = value of A on f_m ⊖ f_{m+1} (m = 1..r-1), a[r] = 0 on f_r
        a = np.zeros(r + 1)
        recon = np.zeros_like(A)
        for m in range(1, r):
            U = self.between(flag[m - 1], flag[m])
            a[m] = np.trace(U.T @ A @ U) / U.shape[1]
            recon += a[m] * (U @ U.T)
        y = None
        if not top_is_g:
            U0 = self.complement(flag[0])
            Y = U0.T @ A @ U0 - a[1] * np.eye(U0.shape[1])
            y = U0 @ Y @ U0.T
            recon += y + a[1] * (U0 @ U0.T)
        if np.abs(A - recon).max() > tol:
            return None
        lam = np.zeros(r)
        for i in range(1, r):
            lam[i] = self.codim(flag[i]) * (a[i] - a[i + 1])
        lam[0] = 0.0 if top_is_g else float(np.trace(y))
        if lam.min() < -tol:
            return None
        z = None
        if y is not None:
            if lam[0] <= tol:
                if np.abs(y).max() > 10 * tol:
                    return None
            else:
                if not self.star_cone_member(flag[0], y):
                    return None
                z = y / lam[0]
        return ButterflyPoint(flag, np.clip(lam, 0.0, None), z)

    def contains(self, A, flag):
        return self.decompose(A, flag) is not None

    def gamma(self, A, flag, point=None):
        """Orthogonal projection of a butterfly point onto its underlying simplex."""
        if self.cat.items[flag[0]].is_full():
            return np.asarray(A, dtype=float)
        point = self.decompose(A, flag) if point is None else point
        if point is None:
            raise NotInButterfly(f"point is not in the butterfly of {self.flag_names(flag)}")
        return sum(l * self.chi(f) for l, f in zip(point.lambdas, flag))

    def max_flag(self, A):
        """Greatest flag whose butterfly contains A (None if A lies in no butterfly)."""
        containing = [f for f in self.flags if self.contains(A, f)]
        if not containing:
            return None
        best = containing[0]
        for f in containing[1:]:
            best = flag_product(self.cat, best, f)
        return best

    def level_member(self, A, s):
        return any(self.height(f) > s and self.contains(A, f) for f in self.flags)

    def flag_names(self, flag):
        return " > ".join(self.cat.items[i].name for i in flag)

    # sampling
    def sample_star(self, i, rng, face_prob=0.3):
        """A point of B[(items[i])]: star X (fine) or cell D (draft)."""
        cat = self.cat
        c = self.chi(i)
        u = rng.random()
        if u < face_prob / 2:
            return c
        if u < face_prob:
            above = [j for j in range(len(cat.items)) if cat.lt(i, j) and not cat.items[j].is_full()]
            if above:
                return self.sample_star(int(rng.choice(above)), rng, face_prob)
            return c
        D = random_direction(self.tangent(i), rng)
        if D is None:
            return c
        t_exit = ray_exit_time(self.g, cat.items[i], D, self.tol, draft=self.version == DRAFT)
        t = t_exit if rng.random() < 0.15 else rng.uniform(0.0, t_exit)
        return c + t * D

    def sample(self, flag, rng, face_prob=0.3):
        """A random point of B[flag], with faces hit at positive rate."""
        if not self.nonempty(flag):
            raise NotInButterfly("the butterfly of (g) is empty")
        r = len(flag)
        lam = rng.dirichlet(np.ones(r))
        drop = rng.random(r) < face_prob
        if drop.all():
            drop[int(rng.integers(r))] = False
        lam = np.where(drop, 0.0, lam)
        top_is_g = self.cat.items[flag[0]].is_full()
        if top_is_g:
            lam[0] = 0.0
            if lam.sum() == 0.0:
                lam[1 + int(rng.integers(r - 1))] = 1.0
        lam = lam / lam.sum()
        x = sum(l * self.chi(f) for l, f in zip(lam[1:], flag[1:])) if r > 1 else 0.0
        if not top_is_g:
            x = x + lam[0] * self.sample_star(flag[0], rng, face_prob)
        return symmetrize(np.asarray(x, dtype=float))

    def sample_above(self, flag, rng, face_prob=0.3):
        """A point of B[ψ] for a random nonempty ψ ≥ flag (so also a point of B[flag])."""
        ups = [f for f in self.flags if self.nonempty(f) and flag_leq(self.cat, flag, f)]
        return self.sample(ups[int(rng.integers(len(ups)))], rng, face_prob)


# ------------------------------------------------ membership and projection

def simplex_membership(space, A, flag):
    """Barycentric coefficients of A over the χ̄ of the proper members of flag."""
    cat = space.cat
    proper = tuple(f for f in flag if not cat.items[f].is_full())
    if not proper:
        raise NotInSimplex("flag has no proper members")
    gi = cat.g_index
    if gi is None:
        raise NotInSimplex("catalog must contain g")
    point = space.decompose(A, (gi,) + proper)
    if point is None:
        raise NotInSimplex(f"operator is not in the simplex of {space.flag_names(flag)}")
    return point.lambdas[1:]


def butterfly_membership(space, A, flag):
    """(A_1, λ_1, z): A = (1 - λ_1) A_1 + λ_1 z with A_1 in the simplex of the lower members."""
    point = space.decompose(A, flag)
    if point is None:
        raise NotInButterfly(f"operator is not in the butterfly of {space.flag_names(flag)}")
    lam1 = point.kappa
    A1 = None
    if lam1 < 1.0 - space.tol and len(flag) > 1:
        A1 = sum(l * space.chi(f) for l, f in zip(point.lambdas[1:], flag[1:])) / (1.0 - lam1)
    return A1, lam1, point.z


def gamma_projection(space, A, flag):
    return space.gamma(A, flag)


def x_level_membership(space, A, s):
    return space.level_member(A, s)


@dataclass
class IntersectionReport:
    pairs: int
    points: int
    violations: int
    sampling_failures: int
    hits: int  # samples that lie in both butterflies


def intersection_sample_check(space, flags=None, samples=1000, seed=0):
    """Sampled check of B[φ1] ∩ B[φ2] = B[φ1 φ2] over all ordered flag pairs.

    The samples of each φ1 are drawn once (from butterflies of flags ≥ φ1) and
    reused for every φ2.
    """
    rng = np.random.default_rng(seed)
    flags = [f for f in (space.flags if flags is None else flags) if space.nonempty(f)]
    all_f = space.flags
    index = {f: i for i, f in enumerate(all_f)}
    report = IntersectionReport(0, 0, 0, 0, 0)
    for phi1 in flags:
        pts = [space.sample_above(phi1, rng) if k % 2 else space.sample(phi1, rng) for k in range(samples)]
        member = np.zeros((len(pts), len(all_f)), dtype=bool)
        for p, x in enumerate(pts):
            for j, f in enumerate(all_f):
                member[p, j] = space.contains(x, f)
        report.points += len(pts)
        own = member[:, index[phi1]]
        report.sampling_failures += int((~own).sum())
        for phi2 in flags:
            prod = flag_product(space.cat, phi1, phi2)
            both = own & member[:, index[phi2]]
            report.violations += int((both != (own & member[:, index[prod]])).sum())
            report.hits += int(both.sum())
            report.pairs += 1
    return report


# ---------------------------------------------------------- retractions

def _segment_distance(p, a, b):
    d = b - a
    dd = float(np.sum(d * d))
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, float(np.sum((p - a) * d)) / dd))
    return float(np.linalg.norm(p - a - t * d))


@dataclass
class RetractionReport:
    level: int
    samples: int
    net_size: int
    net_resolution: float
    delta: float
    worst_bound: float
    sigma_one: int
    fixed_violations: int
    identity_violations: int
    stay_violations: int
    gamma_disagreements: int
    violations: int
    trace: list

    @property
    def ok(self):
        return (self.violations == 0 and self.fixed_violations == 0 and self.identity_violations == 0
                and self.stay_violations == 0 and self.gamma_disagreements == 0)


def z_net(space, s, rng, per_pair=20):
    """Sampled pairs (x', γ_φ(x')) with x' ∈ B[ψ], ψ ≥ φ, h(ψ) > s, h(φ) ≥ s."""
    cat = space.cat
    xs, ys = [], []
    for phi in space.flags:
        if not space.nonempty(phi) or space.height(phi) < s:
            continue
        ups = [f for f in space.flags
               if space.nonempty(f) and space.height(f) > s and flag_leq(cat, phi, f)]
        for psi in ups:
            for _ in range(per_pair):
                x = space.sample(psi, rng)
                pt = space.decompose(x, phi)
                if pt is None:
                    continue
                xs.append(x)
                ys.append(space.gamma(x, phi, pt))
    return xs, ys


def _net_resolution(xs, ys, probe_xs, probe_ys):
    if not xs or not probe_xs:
        return 0.0
    X = np.array([x.ravel() for x in xs])
    Y = np.array([y.ravel() for y in ys])
    worst = 0.0
    for px, py in zip(probe_xs, probe_ys):
        d = np.maximum(np.linalg.norm(X - px.ravel(), axis=1), np.linalg.norm(Y - py.ravel(), axis=1))
        worst = max(worst, float(d.min()))
    return worst


def retraction_step(space, s, delta=0.05, samples=1000, seed=0, per_pair=20, t_grid=(0.0, 0.5, 1.0),
                    raise_on_violation=False):
    """Evaluate f_t(x) = (1 - σ t) x + σ t γ(x) on samples of X^(s-1) and check its postconditions."""
    rng = np.random.default_rng(seed)
    xs, ys = z_net(space, s, rng, per_pair)
    px, py = z_net(space, s, rng, max(1, per_pair // 4))
    resolution = _net_resolution(xs, ys, px, py)
    X = np.array([x.ravel() for x in xs]) if xs else np.zeros((0, space.g.dim ** 2))
    Y = np.array([y.ravel() for y in ys]) if ys else np.zeros((0, space.g.dim ** 2))
    domain = [f for f in space.flags if space.nonempty(f) and space.height(f) >= s]
    rep = RetractionReport(s, 0, len(xs), resolution, delta, 0.0, 0, 0, 0, 0, 0, 0, [])
    if not domain:
        return rep
    for sid in range(samples):
        x = space.sample(domain[int(rng.integers(len(domain)))], rng)
        psi = space.max_flag(x)
        rep.samples += 1
        if psi is None:
            rep.stay_violations += 1
            continue
        gx = space.gamma(x, psi)
        hx = space.height(psi)
        if hx > s:
            sigma = 0.0
        elif len(X):
            dist = np.maximum(np.linalg.norm(X - x.ravel(), axis=1), np.linalg.norm(Y - gx.ravel(), axis=1))
            sigma = min(1.0, float(dist.min()) / delta)
        else:
            sigma = 1.0
        images = {t: (1 - sigma * t) * x + sigma * t * gx for t in t_grid}
        if 0.0 in images and not np.array_equal(images[0.0], x):
            rep.identity_violations += 1
        if sigma == 0.0 and any(not np.array_equal(v, x) for v in images.values()):
            rep.fixed_violations += 1
        for t, v in images.items():
            if not space.contains(v, psi):
                rep.stay_violations += 1
                break
        f1 = (1 - sigma) * x + sigma * gx
        if sigma == 0.0 and hx > s:
            bound = 0.0
        elif sigma >= 1.0:
            bound = 0.0 if space.level_member(gx, s) else math.inf
            rep.sigma_one += 1
        else:
            bound = min(_segment_distance(f1.ravel(), a, b) for a, b in zip(X, Y))
        # γ independence: every flag of height s containing x gives the same projection
        if hx == s:
            for phi in space.flags:
                if space.height(phi) == s and space.nonempty(phi):
                    pt = space.decompose(x, phi)
                    if pt is not None and np.abs(space.gamma(x, phi, pt) - gx).max() > 1e3 * space.tol:
                        rep.gamma_disagreements += 1
                        break
        rep.worst_bound = max(rep.worst_bound, bound)
        if not bound < delta:
            rep.violations += 1
        rep.trace.append({"sample": sid, "sigma": sigma, "height": hx, "bound": bound})
    if raise_on_violation and not rep.ok:
        raise EndpointBoundViolated(f"level {s}: {rep.violations} endpoint violations", worst=rep.worst_bound)
    return rep


@dataclass
class StarRetractionReport:
    item: int
    samples: int
    boundary_net: int
    worst_endpoint: float
    stay_violations: int
    fixed_violations: int
    violations: int

    @property
    def ok(self):
        return self.violations == 0 and self.stay_violations == 0 and self.fixed_violations == 0


def star_boundary_net(space, i, rng, per_item=50):
    """Sampled Y = ⋃_{l > k} B[(l)], which lies on the boundary of the cell of k."""
    cat = space.cat
    above = [j for j in range(len(cat.items)) if cat.lt(i, j) and not cat.items[j].is_full()]
    return [space.sample_star(j, rng) for j in above for _ in range(per_item)]


def _radial(space, i, x):
    """x = c + r (ω - c) with ω on the boundary of the cell of items[i] and r ∈ [0, 1]."""
    c = space.chi(i)
    D = x - c
    norm = float(np.linalg.norm(D))
    if norm <= space.tol:
        return 0.0, None
    u = D / norm
    t_exit = ray_exit_time(space.g, space.cat.items[i], u, space.tol, draft=True)
    return norm / t_exit, c + t_exit * u


def star_retraction(space, i, Y=None, delta=0.05, samples=1000, seed=0, raise_on_violation=False):
    """Radial contraction f_t(rω) = (1 - s(ω) t) rω of the star of items[i] toward the cone over Y."""
    rng = np.random.default_rng(seed)
    c = space.chi(i)
    Y = star_boundary_net(space, i, rng) if Y is None else list(Y)
    Yb = np.array([y.ravel() for y in Y]) if Y else np.zeros((0, c.size))
    rep = StarRetractionReport(i, 0, len(Y), 0.0, 0, 0, 0)
    for _ in range(samples):
        x = space.sample_star(i, rng)
        rep.samples += 1
        r, omega = _radial(space, i, x)
        if omega is None:
            continue
        if len(Yb):
            dists = np.linalg.norm(Yb - omega.ravel(), axis=1)
            k = int(dists.argmin())
            s_val = min(1.0, float(dists[k]) / delta)
        else:
            s_val = 1.0
        if s_val == 0.0 and not np.array_equal((1 - s_val) * (x - c) + c, x):
            rep.fixed_violations += 1
        f1 = c + (1 - s_val) * (x - c)
        for t in (0.5, 1.0):
            ft = c + (1 - s_val * t) * (x - c)
            if not space.contains(ft, (i,)):
                rep.stay_violations += 1
                break
        if s_val >= 1.0 or not len(Yb):
            endpoint = float(np.linalg.norm(f1 - c))
            endpoint = 0.0 if endpoint <= space.tol else endpoint
        else:
            endpoint = min(_segment_distance(f1.ravel(), c.ravel(), Yb[k]),
                           (1 - s_val) * r * float(dists[k]))
        rep.worst_endpoint = max(rep.worst_endpoint, endpoint)
        if endpoint > 0.25 * delta + space.tol:
            rep.violations += 1
    if raise_on_violation and not rep.ok:
        raise StarViolation(f"star retraction of item {i}: {rep.violations} endpoint violations")
    return rep


def flag_law_violations(cat, flags=None):
    """Exhaustive count of failures of the flag-product laws."""
    flags = all_flags(cat) if flags is None else flags
    out = {"commutative": 0, "associative": 0, "idempotent": 0, "upper_bound": 0, "least": 0, "monotone": 0}
    prod = {}
    for a in flags:
        for b in flags:
            prod[a, b] = flag_product(cat, a, b)
    for a in flags:
        if prod[a, a] != a:
            out["idempotent"] += 1
        for b in flags:
            ab = prod[a, b]
            if ab != prod[b, a]:
                out["commutative"] += 1
            if not (flag_leq(cat, a, ab) and flag_leq(cat, b, ab)):
                out["upper_bound"] += 1
            for c in flags:
                if prod[ab, c] != prod[a, prod[b, c]]:
                    out["associative"] += 1
                if flag_leq(cat, a, c) and flag_leq(cat, b, c) and not flag_leq(cat, ab, c):
                    out["least"] += 1
                if flag_leq(cat, a, c) and not flag_leq(cat, ab, prod[c, b]):
                    out["monotone"] += 1
    return out
