"""Scalar and Ricci curvature of invariant metrics on G/H, curvature along rays, Einstein search.

A metric is a positive symmetric operator P on m = g ⊖ h written in a fixed
Q-orthonormal basis M of m, so that <X, Y>_P = Q(P X, Y).  Curvature uses the
standard homogeneous formulas in a P-orthonormal frame X_i:

    sc  = -1/2 Σ B(X_i, X_i) - 1/4 Σ |[X_i, X_j]_m|^2
    ric(X, Y) = -1/2 Σ <[X, X_i]_m, [Y, X_i]_m> - 1/2 B(X, Y)
                + 1/4 Σ <[X_i, X_j]_m, X> <[X_i, X_j]_m, Y>

(G compact, so the mean-curvature vector vanishes).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    BoundViolated,
    InvalidRay,
    Misclassification,
    NonConvergence,
    NotPositiveDefinite,
    ValidationError,
)
from .lie_core import DEFAULT_TOL, killing_form, killing_form_of
from .operators import (
    _cluster,
    equivariant_symmetric_basis,
    from_quotient,
    in_W,
    kernel_subalgebra,
    model_from_sphere,
)


@dataclass
class IsotropyDecomposition:
    M: np.ndarray
    summands: list
    irreducible: list

    @property
    def dims(self):
        return [s.shape[1] for s in self.summands]


@dataclass
class InvariantMetric:
    op: np.ndarray

    def __post_init__(self):
        self.op = 0.5 * (np.asarray(self.op, dtype=float) + np.asarray(self.op, dtype=float).T)
        w = np.linalg.eigvalsh(self.op) if self.op.size else np.ones(0)
        if w.size and w.min() <= 0:
            raise NotPositiveDefinite(f"metric has eigenvalue {w.min():.3e}")

    def normalized(self):
        n = self.op.shape[0]
        sign, logdet = np.linalg.slogdet(self.op)
        return InvariantMetric(self.op * math.exp(-logdet / n))


@dataclass(frozen=True)
class Ray:
    V: np.ndarray

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.V)


class HomogeneousSpace:
    """Caches the restricted structure of m = g ⊖ h and its invariance constraints."""

    def __init__(self, g, h, generators=(), tol=DEFAULT_TOL):
        self.g, self.h, self.tol = g, h, tol
        self.M = h.complement()
        M = self.M
        self.n = M.shape[1]
        self.c = np.einsum("ijk,ia,jb,kc->abc", g.structure, M, M, M, optimize=True)
        self.B = M.T @ killing_form(g) @ M
        ops = [M.T @ g.ad(z) @ M for z in h.basis.T]
        ops += [M.T @ np.asarray(G) @ M for G in generators]
        self.operators = [o for o in ops if np.abs(o).max(initial=0.0) > tol]
        self.generators = [g.ad(z) for z in h.basis.T] + [np.asarray(G) for G in generators]
        self._basis = None

    @classmethod
    def from_catalog(cls, cat):
        return cls(cat.algebra, cat.h, cat.generators, cat.algebra.tol)

    @property
    def equivariant_basis(self):
        """Orthonormal basis of invariant symmetric operators on m."""
        if self._basis is None:
            self._basis = equivariant_symmetric_basis(np.eye(self.n), self.operators, self.tol)
        return self._basis

    def is_invariant(self, P, tol=1e-8):
        return all(np.abs(P @ o - o @ P).max() <= tol * max(1.0, np.abs(P).max()) for o in self.operators)

    # -- curvature

    def _frames(self, P, spectral=None):
        w, U = np.linalg.eigh(0.5 * (P + P.T)) if spectral is None else spectral
        if w.min() <= 0:
            raise NotPositiveDefinite(f"metric has eigenvalue {w.min():.3e}")
        S = (U / np.sqrt(w)) @ U.T
        R = (U * np.sqrt(w)) @ U.T
        D = np.einsum("abc,ai,bj,ck->ijk", self.c, S, S, R, optimize=True)
        return S, R, D

    def scalar_curvature(self, P, spectral=None):
        """sc of P; ``spectral = (w, U)`` supplies an eigendecomposition for ill-conditioned metrics."""
        if self.n == 0:
            return 0.0
        S, _, D = self._frames(P, spectral)
        return float(-0.5 * np.trace(S @ self.B @ S) - 0.25 * np.sum(D * D))

    def ricci_frame(self, P):
        """Ricci tensor in the P-orthonormal frame S = P^{-1/2}."""
        S, _, D = self._frames(P)
        return (-0.5 * np.einsum("kij,lij->kl", D, D) - 0.5 * S @ self.B @ S
                + 0.25 * np.einsum("ijk,ijl->kl", D, D))

    def ricci(self, P):
        """Ricci as a bilinear form in the Q-orthonormal basis of m."""
        _, R, _ = self._frames(P)
        return R @ self.ricci_frame(P) @ R

    def einstein_residual(self, P):
        Ric = self.ricci_frame(P)
        sc = np.trace(Ric)
        return float(np.linalg.norm(Ric - sc / self.n * np.eye(self.n)))

    def sc_gradient(self, P):
        """(sc/n) g - ric as a bilinear form; its pairing with a direction H is <grad, H>_P."""
        return self.scalar_curvature(P) / self.n * P - self.ricci(P)

    def directional_derivative(self, P, H):
        """Analytic d/ds sc(P + sH) = -<ric, H>_P."""
        Pinv = np.linalg.inv(P)
        return float(-np.trace(Pinv @ self.ricci(P) @ Pinv @ H))

    def gradient_check(self, P, H, step=1e-5):
        """Relative error between the analytic derivative and a central difference."""
        fd = (self.scalar_curvature(P + step * H) - self.scalar_curvature(P - step * H)) / (2 * step)
        an = self.directional_derivative(P, H)
        return abs(fd - an) / max(1.0, abs(an)), an, fd

    # -- random invariant data

    def random_metric(self, rng, spread=1.0):
        X = sum((rng.normal() * E for E in self.equivariant_basis), np.zeros((self.n, self.n)))
        w, U = np.linalg.eigh(spread * X)
        return InvariantMetric((U * np.exp(w)) @ U.T).normalized().op

    def random_traceless_direction(self, P, rng):
        H = sum((rng.normal() * E for E in self.equivariant_basis), np.zeros((self.n, self.n)))
        Pinv = np.linalg.inv(P)
        H = H - np.trace(Pinv @ H) / self.n * P
        norm = np.linalg.norm(H)
        return None if norm < 1e-12 else H / norm


def isotropy_summands(g, h, generators=(), tol=DEFAULT_TOL, seed=0):
    """Joint eigenspaces of a generic invariant symmetric operator on m."""
    space = HomogeneousSpace(g, h, generators, tol)
    n = space.n
    if n == 0:
        return IsotropyDecomposition(space.M, [], [])
    rng = np.random.default_rng(seed)
    X = sum(rng.normal() * E for E in space.equivariant_basis)
    w, U = np.linalg.eigh(X)
    groups = _cluster(w, 1e-6 * max(1.0, np.abs(w).max()))
    summands = []
    for a, b in groups:
        block = U[:, a:b]
        # canonical orientation: largest entry of each column positive, columns ordered lexicographically
        block = block * np.sign(block[np.abs(block).argmax(axis=0), range(block.shape[1])])
        summands.append(block)
    summands.sort(key=lambda s: (s.shape[1], tuple(np.round(-np.abs(s[:, 0]), 8))))
    irreducible = []
    for s in summands:
        local = [s.T @ o @ s for o in space.operators]
        irreducible.append(len(equivariant_symmetric_basis(np.eye(s.shape[1]), local, tol)) == 1)
    return IsotropyDecomposition(space.M, summands, irreducible)


def scalar_curvature(g, h, metric, generators=()):
    op = metric.op if isinstance(metric, InvariantMetric) else metric
    return HomogeneousSpace(g, h, generators).scalar_curvature(op)


def ricci(g, h, metric, generators=()):
    op = metric.op if isinstance(metric, InvariantMetric) else metric
    return HomogeneousSpace(g, h, generators).ricci(op)


def einstein_residual(g, h, metric, generators=()):
    op = metric.op if isinstance(metric, InvariantMetric) else metric
    return HomogeneousSpace(g, h, generators).einstein_residual(op)


def s_of_k(g, h, k):
    """Scalar curvature of the normal metric on K/H."""
    Mk = k.basis - h.basis @ (h.basis.T @ k.basis)
    u, s, _ = np.linalg.svd(Mk, full_matrices=False)
    Mk = u[:, s > 0.5]
    casimir = sum(float(np.sum((g.ad(z) @ Mk) ** 2)) for z in h.basis.T)
    tr_bh = float(np.trace(killing_form_of(h))) if h.dim else 0.0
    tr_bk = float(np.trace(killing_form_of(k))) if k.dim else 0.0
    return 0.25 * (tr_bh - tr_bk + casimir)


# ------------------------------------------------------------------ rays

def make_ray(space, V, tol=1e-8):
    V = np.asarray(V, dtype=float)
    if V.shape != (space.n, space.n) or np.abs(V - V.T).max() > tol:
        raise InvalidRay("ray direction must be a symmetric operator on m")
    if abs(np.trace(V)) > tol:
        raise InvalidRay("ray direction must be traceless")
    if abs(np.sum(V * V) - 1.0) > tol:
        raise InvalidRay("ray direction must satisfy tr V^2 = 1")
    if not space.is_invariant(V, tol):
        raise InvalidRay("ray direction is not invariant")
    return Ray(0.5 * (V + V.T))


def ray_metric(ray, t):
    w, U = np.linalg.eigh(ray.V)
    return InvariantMetric((U * np.exp(t * w)) @ U.T)


def sc_along_ray(space, ray, t_grid):
    w, U = np.linalg.eigh(ray.V)
    return np.array([space.scalar_curvature(None, (np.exp(t * w), U)) for t in t_grid])


def quotient_projectors(space, chain):
    """Projectors (in m-coordinates) onto k_i ⊖ k_{i-1} for an increasing chain ending at g."""
    prev = space.h.basis
    out = []
    for k in chain:
        Mk = space.M.T @ (k.basis - prev @ (prev.T @ k.basis))
        u, s, _ = np.linalg.svd(Mk, full_matrices=False)
        Uk = u[:, s > 0.5]
        out.append(Uk @ Uk.T)
        prev = k.basis
    return out


def flag_ray(space, chain, v_hat=None, rng=None):
    """Unit traceless ray that is constant with increasing values on consecutive quotients of the chain."""
    projs = quotient_projectors(space, chain)
    if len(projs) < 2:
        raise InvalidRay("a flag ray needs at least one proper subalgebra above h")
    dims = np.array([round(np.trace(p)) for p in projs], dtype=float)
    if v_hat is None:
        rng = np.random.default_rng() if rng is None else rng
        v_hat = np.cumsum(rng.uniform(0.2, 1.0, len(projs)))
    v = np.asarray(v_hat, dtype=float)
    if np.any(np.diff(v) <= 0):
        raise InvalidRay("eigenvalues along a flag must increase")
    v = v - np.dot(dims, v) / dims.sum()
    v = v / math.sqrt(np.dot(dims, v * v))
    return make_ray(space, sum(x * p for x, p in zip(v, projs))), v


@dataclass
class AsymptoticReport:
    skipped: bool
    note: str = ""
    s_values: list = field(default_factory=list)
    v_hat: list = field(default_factory=list)
    worst_margin: float = math.inf
    worst_exp_margin: float = math.inf
    worst_t: float = 0.0
    exponent_rate: float = 0.0


def asymptotic_check(space, chain, ray, t_grid, tol=1e-9, raise_on_violation=True, toral_mask=None):
    """Telescoping lower bound and exponential growth of sc along a flag ray."""
    if toral_mask is not None and any(toral_mask[:-1]):
        return AsymptoticReport(True, "flag has a toral member: the ray is not a nontoral-flag direction")
    projs = quotient_projectors(space, chain)
    v_hat = [float(np.sum(ray.V * p) / np.trace(p)) for p in projs]
    s_vals = [0.0] + [s_of_k(space.g, space.h, k) for k in chain]
    gaps = np.diff(s_vals)
    if np.any(gaps <= tol):
        return AsymptoticReport(True, "s is not strictly increasing along the flag", s_vals, v_hat)
    rate = 1.0 / math.sqrt(space.n * (space.n - 1)) if space.n > 1 else 0.0
    c = float(gaps.min())
    sc = sc_along_ray(space, ray, t_grid)
    rep = AsymptoticReport(False, "", s_vals, v_hat, exponent_rate=rate)
    for t, value in zip(t_grid, sc):
        bound = float(np.sum(gaps * np.exp(-t * np.array(v_hat))))
        m1 = value - bound + tol * max(1.0, abs(bound))
        m2 = value - c * math.exp(t * rate) + tol * max(1.0, abs(value))
        if min(m1, m2) < min(rep.worst_margin, rep.worst_exp_margin):
            rep.worst_t = float(t)
        rep.worst_margin = min(rep.worst_margin, m1)
        rep.worst_exp_margin = min(rep.worst_exp_margin, m2)
    if raise_on_violation and min(rep.worst_margin, rep.worst_exp_margin) < 0:
        raise BoundViolated("sc fell below its asymptotic lower bound", rep.worst_t)
    return rep


# ------------------------------------------------------------ trichotomy

PLUS_INF, NONPOSITIVE, MINUS_INF, UNCLEAR = "+inf", "<=0", "-inf", "unclear"
_FLOAT_EXP_LIMIT = 600.0


def ray_expansion(space, ray, merge_tol=1e-9):
    """sc(g_t) as an exact finite sum Σ a_r e^{r t}, returned as sorted (r, a) pairs."""
    w, U = np.linalg.eigh(ray.V)
    c = np.einsum("abc,ai,bj,ck->ijk", space.c, U, U, U, optimize=True)
    B = np.diag(U.T @ space.B @ U)
    rates = np.concatenate([-w, (w[None, None, :] - w[:, None, None] - w[None, :, None]).ravel()])
    coeffs = np.concatenate([-0.5 * B, -0.25 * (c * c).ravel()])
    order = np.argsort(rates)
    rates, coeffs = rates[order], coeffs[order]
    merged = []
    for r, a in zip(rates, coeffs):
        if merged and r - merged[-1][0] <= merge_tol:
            merged[-1][1] += a
        else:
            merged.append([float(r), float(a)])
    scale = max((abs(a) for _, a in merged), default=1.0)
    return [(r, a) for r, a in merged if abs(a) > 1e-10 * scale]


def evaluate_expansion(expansion, t):
    return float(sum(a * math.exp(r * t) for r, a in expansion))


def limit_class(expansion, tol=1e-9):
    """Limit of sc along the ray read off from the leading exponential."""
    if not expansion:
        return NONPOSITIVE
    r, a = expansion[-1]
    if r > tol:
        return PLUS_INF if a > 0 else MINUS_INF
    limit = a if abs(r) <= tol else 0.0
    return NONPOSITIVE if limit <= tol else UNCLEAR


def _dominance_time(expansion, verdict, sc_q, t_max):
    """First doubling time at which the leading term dominates and the sign criterion is met."""
    r, a = expansion[-1]
    t = 1.0
    while t <= t_max:
        rest = sum(abs(b) * math.exp((q - r) * t) for q, b in expansion[:-1])
        value = evaluate_expansion(expansion, t)
        if abs(a) >= 2 * rest and ((verdict == PLUS_INF and value > 2 * sc_q) or
                                   (verdict == MINUS_INF and value < 0)):
            return t
        t *= 2
    return None


def expected_ray_class(space, ray, tol=1e-7):
    """Class predicted from membership: outside W gives -inf, a nontoral kernel +inf, otherwise None."""
    A = from_quotient(model_from_sphere(ray.V, tol), space.M)
    if not in_W(space.g, space.h, space.generators, A, tol):
        return MINUS_INF
    ker = kernel_subalgebra(space.g, A, tol)
    br = space.g.brackets(ker.basis, ker.basis) if ker.dim > 1 else np.zeros((space.g.dim, 0))
    resid = br - space.h.basis @ (space.h.basis.T @ br)
    return PLUS_INF if np.abs(resid).max(initial=0.0) > tol else None


@dataclass
class RayVerdict:
    verdict: str
    leading_rate: float
    leading_coefficient: float
    t_confirm: float | None
    sc_confirm: float | None
    numeric_agreement: float | None
    note: str = ""


def trichotomy_probe(space, ray, expected=None, T=10.0, points=21, tol=1e-9):
    """Classify the limit of sc along a ray and confirm it with direct curvature evaluations."""
    sc_q = space.scalar_curvature(np.eye(space.n))
    expansion = ray_expansion(space, ray)
    verdict = limit_class(expansion, tol)
    r, a = expansion[-1] if expansion else (0.0, 0.0)
    rep = RayVerdict(verdict, r, a, None, None, None)
    max_rate = max((abs(q) for q, _ in expansion), default=0.0)
    t_max = _FLOAT_EXP_LIMIT / max(max_rate, 1e-12)
    if verdict in (PLUS_INF, MINUS_INF):
        t_dom = _dominance_time(expansion, verdict, sc_q, t_max)
        if t_dom is None:
            rep.note = "leading term does not dominate within floating-point range"
        else:
            t1 = max(T, t_dom)
            t2 = t1 * 1.05 + 0.1
            if t2 * max_rate > _FLOAT_EXP_LIMIT:
                t1, t2 = t_dom, t_dom * 1.05
            s1, s2 = sc_along_ray(space, ray, [t1, t2])
            rep.t_confirm, rep.sc_confirm = t1, s1
            rep.numeric_agreement = abs(s1 - evaluate_expansion(expansion, t1)) / max(1.0, abs(s1))
            ok = (s1 > 2 * sc_q and s2 > s1) if verdict == PLUS_INF else (s1 < 0 and s2 < s1)
            if not ok:
                rep.note = "direct evaluation disagrees with the expansion"
                verdict = rep.verdict = UNCLEAR
    elif verdict == NONPOSITIVE:
        t_grid = np.linspace(0.0, T, points)
        sc = sc_along_ray(space, ray, t_grid)
        rep.t_confirm, rep.sc_confirm = float(T), float(sc[-1])
        rep.numeric_agreement = float(max(abs(x - evaluate_expansion(expansion, t)) / max(1.0, abs(x))
                                          for t, x in zip(t_grid, sc)))
        if sc.max() > sc_q + tol:
            rep.note = "sc exceeds sc(Q) along the ray"
            verdict = rep.verdict = UNCLEAR
    if expected is not None and verdict != expected:
        raise Misclassification(f"ray classified {verdict}, expected {expected}")
    return rep


# --------------------------------------------------------- Einstein search

@dataclass
class CriticalMetric:
    op: np.ndarray
    sc: float
    residual: float
    summand_scales: list


@dataclass
class SearchResult:
    metrics: list
    starts: int
    diagnostics: list = field(default_factory=list)
    note: str = ""


def _param_to_metric(space, x, basis=None):
    basis = space.equivariant_basis if basis is None else basis
    X = sum(xi * E for xi, E in zip(x, basis))
    w, U = np.linalg.eigh(X)
    return InvariantMetric((U * np.exp(w)) @ U.T).normalized().op


def _einstein_equations(space, x, basis=None):
    basis = space.equivariant_basis if basis is None else basis
    P = _param_to_metric(space, x, basis)
    E = space.ricci(P) - space.scalar_curvature(P) / space.n * P
    Pinv_half = np.linalg.inv(np.linalg.cholesky(P))
    E = Pinv_half @ E @ Pinv_half.T
    return np.array([np.sum(E * B) for B in basis])


def _ascend(space, P, steps):
    """Normalized gradient ascent with backtracking and volume renormalization."""
    trace = []
    sc = space.scalar_curvature(P)
    for it in range(steps):
        G = space.sc_gradient(P)
        Pinv = np.linalg.inv(P)
        norm = math.sqrt(max(np.trace(Pinv @ G @ Pinv @ G), 0.0))
        if norm < 1e-12:
            break
        step = G / max(1.0, norm)
        for _ in range(30):
            cand = InvariantMetric(P + step).normalized().op if np.linalg.eigvalsh(P + step).min() > 0 else None
            if cand is not None:
                new = space.scalar_curvature(cand)
                if new >= sc:
                    P, sc = cand, new
                    break
            step = step / 2
        trace.append({"iteration": it, "sc": sc, "residual": space.einstein_residual(P)})
    return P, trace


def summand_scales(P, decomposition):
    return [float(np.trace(s.T @ P @ s) / s.shape[1]) for s in decomposition.summands]


def einstein_search(space, starts=20, budget=200, seed=0, ascent_steps=5, residual_tol=1e-8,
                    dedupe_tol=1e-5, decomposition=None, family="diagonal"):
    """Multi-start search for unit-volume invariant Einstein metrics.

    ``family="diagonal"`` searches metrics that are multiples of Q on each isotropy
    summand; ``"full"`` searches every invariant metric.
    """
    rng = np.random.default_rng(seed)
    dec = decomposition or isotropy_summands(space.g, space.h, (), space.tol, seed)
    if family == "diagonal":
        basis = [s @ s.T / math.sqrt(s.shape[1]) for s in dec.summands]
    elif family == "full":
        basis = space.equivariant_basis
    else:
        raise ValidationError("family must be 'diagonal' or 'full'")
    found, diagnostics = [], []
    m = len(basis)
    if budget <= 0 or starts <= 0:
        raise NonConvergence("search budget is empty", {"starts": 0})
    if m <= 1:
        # scaling is the only invariant deformation: Q itself is the unique critical point
        P = np.eye(space.n)
        r = space.einstein_residual(P)
        metrics = [CriticalMetric(P, space.scalar_curvature(P), r, summand_scales(P, dec))] if r < residual_tol else []
        return SearchResult(metrics, 1, [], "isotropy irreducible: the normal metric is the global minimum of sc")
    def polish(x):
        sol = least_squares(lambda y: _einstein_equations(space, y, basis), x, xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=budget)
        return _param_to_metric(space, sol.x, basis)

    for k in range(starts):
        x0 = rng.normal(scale=1.5, size=m)
        P_end, trace = _ascend(space, _param_to_metric(space, x0, basis), ascent_steps)
        # Einstein metrics are typically saddles of sc, so the raw start is polished as well as the ascent endpoint
        candidates = [polish(x0)]
        if ascent_steps > 0:
            candidates.append(polish(np.array([np.sum(matrix_log(P_end) * E) for E in basis])))
        for P in candidates:
            r = space.einstein_residual(P)
            diagnostics.append({"start": k, "residual": r, "sc": space.scalar_curvature(P), "ascent": trace})
            if r >= residual_tol or any(np.linalg.norm(P - f.op) < dedupe_tol for f in found):
                continue
            found.append(CriticalMetric(P, space.scalar_curvature(P), r, summand_scales(P, dec)))
    if not found:
        raise NonConvergence("no start converged to an Einstein metric", {"diagnostics": diagnostics})
    found.sort(key=lambda f: (f.sc, f.summand_scales))
    return SearchResult(found, starts, diagnostics)


def matrix_log(P):
    w, U = np.linalg.eigh(P)
    return (U * np.log(w)) @ U.T


def scale_ratios(scales):
    lo = min(scales)
    return [s / lo for s in scales]
