"""The join coordinate κ on unions of butterflies over an order ideal.

Flags in I have a nontoral top (possibly g) above a toral tail; J is the part
of I containing g.  A point of V[I] splits uniquely as (1 - κ) A_1 + κ A_2 with
A_1 in a toral simplex and A_2 in the nontoral space; κ is read off from the
butterfly decomposition and the commuting system

    A_1 A_2 = A_2 A_1 = λ A_2,   A_1 [V, A_2 V] = λ [V, A_2 V],   λ = the top eigenvalue of A_1,

is checked afterwards as an independent certificate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .butterflies import ButterflySpace, flag_leq
from .errors import EmptyComplement, KappaZero, NotInVI, SystemResidual, ValidationError, WitnessNotFound
from .lattice import OrderIdeal, toral_ideal
from .lie_core import DEFAULT_TOL

SYSTEM_TOL = 1e-8


@dataclass(frozen=True)
class EpsilonConfig:
    eps: float
    L: int

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValidationError("eps must lie in (0, 1)")
        if self.L < 1:
            raise ValidationError("L must be a positive integer")

    @classmethod
    def default(cls, cat, eps=None, L=None):
        n = cat.algebra.dim - cat.h.dim
        eps = certified_eps(n) if eps is None else eps
        return cls(eps, n if L is None else L)

    @property
    def threshold(self):
        return self.eps ** self.L


def certified_eps(n):
    """Largest ε for which the cover W = X_ε ∪ Y_ε ∪ Z is certified."""
    return 1.0 / (2 * n * (n - 1)) if n > 1 else 0.5


def ideal_flag_length(cat, ideal):
    """Longest chain inside the ideal (a catalog-specific bound for L)."""
    from .butterflies import all_flags

    return max((len(f) for f in all_flags(cat) if set(f) <= ideal), default=0)


@dataclass
class JoinPoint:
    A1: np.ndarray | None
    kappa: float
    A2: np.ndarray | None
    flag: tuple = ()
    residual: float = 0.0
    lambdas: np.ndarray = field(default=None, repr=False)


class JoinStructure:
    """I, J and the join decomposition for a sup-closed catalog and an order ideal."""

    def __init__(self, cat, ideal=None, version="fine", tol=DEFAULT_TOL, space=None):
        self.cat = cat
        self.ideal = OrderIdeal(toral_ideal(cat) if ideal is None else ideal)
        self.space = ButterflySpace(cat, version, tol) if space is None else space
        self.tol = tol
        self.I, self.J = build_I_J(cat, self.ideal, self.space.flags)

    def containing_flags(self, A):
        return [f for f in self.I if self.space.nonempty(f) and self.space.contains(A, f)]

    def decompose(self, A, check_system=True):
        flags = self.containing_flags(A)
        if not flags:
            raise NotInVI("operator does not lie in any butterfly of I")
        # the greatest containing flag gives the cleanest split; all others agree with it
        best = flags[0]
        for f in flags[1:]:
            if flag_leq(self.cat, best, f):
                best = f
        pt = self.space.decompose(A, best)
        kappa = pt.kappa
        sp = self.space
        A2 = pt.z if kappa > self.tol else None
        A1 = None
        if kappa < 1.0 - self.tol:
            A1 = sum(l * sp.chi(f) for l, f in zip(pt.lambdas[1:], best[1:])) / (1.0 - kappa)
        if self.cat.items[best[0]].is_full():
            kappa, A2 = 0.0, None
        jp = JoinPoint(A1, float(kappa), A2, best, 0.0, pt.lambdas)
        if check_system:
            jp.residual = system_residual(self.cat.algebra, A1, A2)
            if jp.residual > SYSTEM_TOL:
                raise SystemResidual(jp.residual)
        return jp


def build_I_J(cat, ideal, flags=None):
    """Flags with nontoral top over a toral tail (I), and those containing g (J)."""
    from .butterflies import all_flags

    ideal = set(ideal)
    if all(i in ideal for i in cat.proper_indices()) and cat.g_index is None:
        raise EmptyComplement("the ideal leaves no nontoral items")
    flags = all_flags(cat) if flags is None else flags
    I = [f for f in flags if f[0] not in ideal and all(x in ideal for x in f[1:])]
    if not I:
        raise EmptyComplement("no flag has a nontoral top")
    gi = cat.g_index
    J = [f for f in I if gi is not None and gi in f]
    return I, J


def system_residual(g, A1, A2):
    """max residual of the commuting system; 0 when one side of the join is absent."""
    if A1 is None or A2 is None:
        return 0.0
    lam = float(np.linalg.eigvalsh(A1).max())
    r1 = np.abs(A1 @ A2 - lam * A2).max()
    r2 = np.abs(A2 @ A1 - lam * A2).max()
    # polarized form of V ↦ [V, A_2 V]: T[a, b] = [e_a, A_2 e_b] + [e_b, A_2 e_a]
    T = np.einsum("abk,bc->ack", g.structure, A2)
    T = T + T.transpose(1, 0, 2)
    r3 = np.abs(np.tensordot(T, A1 - lam * np.eye(g.dim), axes=(2, 1))).max()
    return float(max(r1, r2, r3))


def join_decompose(A, js):
    return js.decompose(A)


def kappa(A, js):
    return js.decompose(A).kappa


def in_X_eps(A, cfg, js):
    try:
        k = js.decompose(A).kappa
    except NotInVI:
        return False
    return k >= cfg.threshold


@dataclass
class Witness:
    flag: tuple
    B: np.ndarray
    distance: float
    coefficients: np.ndarray


def near_simplex_witness(A, cfg, js):
    """A toral flag (f_i > ...) and B near χ̄^{f_i} whose hull with the lower χ̄ contains A."""
    jp = js.decompose(A)
    if jp.kappa >= cfg.threshold:
        raise WitnessNotFound(f"κ = {jp.kappa:.3e} is not below ε^L = {cfg.threshold:.3e}")
    sp = js.space
    flag, lam = jp.flag, jp.lambdas
    tail = flag[1:]
    if not tail:
        raise WitnessNotFound("flag has no toral tail")
    B0 = jp.A2 if jp.A2 is not None else (sp.chi(flag[0]) if not js.cat.items[flag[0]].is_full() else None)
    a = np.cumsum(lam)  # a_0 = κ, a_i = κ + λ_1 + ... + λ_i, last = 1
    a0B = lam[0] * B0 if B0 is not None else 0.0
    acc = a0B
    best = None
    for i, f in enumerate(tail, start=1):
        acc = acc + lam[i] * sp.chi(f)
        if a[i] <= 0.0:
            continue
        B = acc / a[i]
        dist = float(np.linalg.norm(B - sp.chi(f)))
        if dist < cfg.eps and sp.contains(B, (f,)):
            coeffs = np.concatenate([[a[i]], lam[i + 1:]])
            recon = a[i] * B + sum(l * sp.chi(x) for l, x in zip(lam[i + 1:], tail[i:]))
            if np.abs(recon - A).max() <= 10 * js.tol:
                best = Witness(tail[i - 1:], B, dist, coeffs)
                break
    if best is None:
        raise WitnessNotFound("no index gives |B_i - χ̄^{f_i}| < ε")
    return best


def retract_to_nontoral(A, js, u_grid=None):
    """Endpoint A_2 of the segment A(u) = (1 - u) A + u A_2, with κ checked along the path."""
    jp = js.decompose(A)
    if jp.kappa <= js.tol or jp.A2 is None:
        raise KappaZero("κ(A) = 0: the point lies in V[J] and has no nontoral endpoint")
    u_grid = np.linspace(0.0, 1.0, 11) if u_grid is None else u_grid
    prev = -math.inf
    for u in u_grid:
        k = js.decompose((1 - u) * A + u * jp.A2).kappa
        if k < prev - 1e-9:
            raise KappaZero(f"κ decreased along the retraction path at u = {u}")
        prev = k
    return jp.A2


@dataclass
class CoverReport:
    samples: int
    in_X_eps: int
    in_Y_eps: int
    in_Z: int
    uncovered: int
    eps: float
    L: int
    certified: bool
    uncovered_examples: list = field(default_factory=list)


def sample_W(js, rng, small_kappa_rate=0.3, cfg=None):
    """Random W-point from a random butterfly; a share gets a tiny κ to exercise Y_ε."""
    sp = js.space
    flags = [f for f in sp.flags if sp.nonempty(f)]
    mixed = [f for f in js.I if len(f) > 1 and not js.cat.items[f[0]].is_full()]
    if mixed and cfg is not None and rng.random() < small_kappa_rate:
        f = mixed[int(rng.integers(len(mixed)))]
        lo = math.log10(cfg.threshold) - 2
        k = 10 ** rng.uniform(lo, 0.0)
        z = sp.sample_star(f[0], rng)
        w = rng.dirichlet(np.ones(len(f) - 1))
        return k * z + (1 - k) * sum(x * sp.chi(i) for x, i in zip(w, f[1:]))
    return sp.sample(flags[int(rng.integers(len(flags)))], rng)


def cover_check(js, cfg, samples=1000, seed=0):
    """Count W-samples outside X_ε ∪ Y_ε ∪ Z."""
    rng = np.random.default_rng(seed)
    n = js.cat.algebra.dim - js.cat.h.dim
    rep = CoverReport(0, 0, 0, 0, 0, cfg.eps, cfg.L, cfg.eps <= certified_eps(n) + 1e-15)
    if not any(js.space.nonempty(f) for f in js.space.flags):
        return rep  # W has no butterflies: nothing to cover
    for _ in range(samples):
        A = sample_W(js, rng, cfg=cfg)
        rep.samples += 1
        try:
            jp = js.decompose(A)
        except NotInVI:
            jp = None
        if jp is not None and jp.kappa >= cfg.threshold:
            rep.in_X_eps += 1
            continue
        if jp is not None:
            try:
                near_simplex_witness(A, cfg, js)
                rep.in_Y_eps += 1
                continue
            except WitnessNotFound:
                pass
        top = js.space.max_flag(A)
        if top is not None and all(i in js.ideal for i in top):
            rep.in_Z += 1
            continue
        rep.uncovered += 1
        if len(rep.uncovered_examples) < 5:
            rep.uncovered_examples.append(A.tolist())
    return rep


def kappa_boundary_check(js, samples=100, seed=0):
    """Largest deviation of κ from 0 on toral simplices and from 1 on the nontoral stars."""
    rng = np.random.default_rng(seed)
    sp = js.space
    worst = {"toral": 0.0, "nontoral": 0.0, "through_g": 0.0}
    counts = dict.fromkeys(worst, 0)
    mixed = [f for f in js.I if sp.nonempty(f) and not js.cat.items[f[0]].is_full()]
    for f in mixed:
        for _ in range(samples):
            if len(f) > 1:
                w = rng.dirichlet(np.ones(len(f) - 1))
                A = sum(x * sp.chi(i) for x, i in zip(w, f[1:]))
                worst["toral"] = max(worst["toral"], abs(js.decompose(A).kappa))
                counts["toral"] += 1
            A = sp.sample_star(f[0], rng)
            worst["nontoral"] = max(worst["nontoral"], abs(js.decompose(A).kappa - 1.0))
            counts["nontoral"] += 1
    for f in js.J:
        if not sp.nonempty(f) or len(f) < 2:
            continue
        for _ in range(samples):
            A = sp.sample(f, rng)
            worst["through_g"] = max(worst["through_g"], abs(js.decompose(A).kappa))
            counts["through_g"] += 1
    return worst, counts
