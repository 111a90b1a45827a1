"""Analysis pipeline, certification suites and report rendering used by the command line."""

import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import topology
from .butterflies import DRAFT, FINE, ButterflySpace, flag_law_violations, intersection_sample_check
from .butterflies import retraction_step, star_retraction
from .catalog_io import catalog_from_dict, catalog_to_dict, load_catalog
from .curvature import (
    HomogeneousSpace,
    PLUS_INF,
    expected_ray_class,
    flag_ray,
    isotropy_summands,
    make_ray,
    s_of_k,
    scale_ratios,
    einstein_search,
    trichotomy_probe,
)
from .errors import EmptyComplement, NonConvergence, ValidationError
from .extension import EpsilonConfig, JoinStructure, cover_check, kappa_boundary_check
from .lattice import classification_table, close_under_sup, nontoral_indices
from .lie_core import DEFAULT_TOL, is_toral
from .operators import (
    filtering_margin,
    is_filtering_by_limit,
    is_filtering_by_minors,
    random_filtering_operator,
    random_trace_one,
    star_property_check,
)
from .presets import PRESET_NAMES, load_preset

REPORT_VERSION = 1
SUITES = ("filtering", "butterflies", "retraction", "cover", "curvature")


@dataclass
class Config:
    tol: float = DEFAULT_TOL
    eps: float | None = None
    samples: int = 100
    seed: int = 0
    field: str = "Q"
    version: str = FINE
    starts: int = 10
    budget: int = 200


def resolve_catalog(source, tol=None):
    """A catalog JSON path or a preset name; ``tol`` re-validates at that tolerance."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise ValidationError(f"catalog file {source} does not exist")
        return load_catalog(path, tol)
    if source in PRESET_NAMES:
        cat = load_preset(source).catalog
        if tol is not None and tol != cat.algebra.tol:
            cat = catalog_from_dict(catalog_to_dict(cat), tol)
        return cat
    raise ValidationError(f"{source!r} is neither a catalog file nor a preset ({', '.join(PRESET_NAMES)})")


def _levels(cat):
    return sorted({it.dim for it in cat.items if not it.is_full() and it.dim > cat.h.dim})


# ---------------------------------------------------------------- analyze

def _homology_row(K, field):
    betti = topology.reduced_homology(K, field)
    return {"vertices": len(K.vertices), "facets": len(K.facets), "reduced_betti": betti,
            "nonzero": (not betti) or any(b != 0 for b in betti)}


def _graph_row(cat, min_only):
    G = topology.build_graph_BWZ(cat, min_only=min_only)
    verdict = topology.graph_criterion(G)
    topology.project_q(cat, G)
    return {"vertices": G.vertices, "edges": [list(e) for e in G.edges],
            "components": int(G.components()[0]), "exists": verdict.exists, "reason": verdict.reason}


def run_analyze(source, cfg=Config()):
    t0 = time.perf_counter()
    cat = close_under_sup(resolve_catalog(source, cfg.tol))
    g, h = cat.algebra, cat.h
    report = {"report_version": REPORT_VERSION, "catalog": cat.name, "dim_g": g.dim, "dim_h": h.dim,
              "config": asdict(cfg)}
    report["classification"] = classification_table(cat)
    nontoral = [i for i in nontoral_indices(cat) if not cat.items[i].is_full()]
    K = topology.nontoral_complex(cat)
    report["homology"] = {"field": cfg.field, "nontoral": _homology_row(K, cfg.field),
                          "minimal_nontoral": _homology_row(topology.minimal_complex(cat), cfg.field)}
    top = topology.cone_certificate(cat, nontoral) if nontoral else None
    report["cone"] = cat.items[top].name if top is not None else None
    report["graphs"] = {"B_WZ": _graph_row(cat, False), "B_WZ_min": _graph_row(cat, True)}

    if cfg.samples > 0:
        report["checks"] = _sampling_checks(cat, cfg)
    if cfg.starts > 0:
        report["einstein"] = einstein_table(cat, cfg)

    torus = is_toral(h, g.full())
    hom = report["homology"]["nontoral"]
    graph_exists = report["graphs"]["B_WZ"]["exists"] or report["graphs"]["B_WZ_min"]["exists"]
    notes = []
    if torus:
        verdict, reason = "excluded", "G/H is a torus: every invariant metric is flat"
    elif top is not None:
        verdict, reason = "inconclusive", f"contractible: the nontoral items form a cone over {report['cone']}"
        if graph_exists:
            notes.append("graph criterion fires although the complex is a cone; check the declared equivalence")
    elif hom["nonzero"]:
        what = "empty" if not hom["reduced_betti"] else f"reduced Betti numbers {hom['reduced_betti']}"
        verdict, reason = "exists", f"non-contractible certificate: nontoral complex is {what}"
    elif graph_exists:
        verdict, reason = "exists", "graph criterion: a graph of almost semisimple classes is disconnected"
    else:
        verdict, reason = "inconclusive", "no certificate: homology vanishes and the graphs are connected"
    report["verdict"] = verdict
    report["verdict_reason"] = reason
    report["notes"] = notes
    report["seconds"] = round(time.perf_counter() - t0, 3)
    return report


def _sampling_checks(cat, cfg):
    space = ButterflySpace(cat, cfg.version, cfg.tol)
    try:
        js = JoinStructure(cat, version=cfg.version, tol=cfg.tol, space=space)
    except EmptyComplement:
        out = {"cover": {"note": "no nontoral items: X_eps is empty"}}
    else:
        ecfg = EpsilonConfig.default(cat, cfg.eps)
        cov = cover_check(js, ecfg, cfg.samples, cfg.seed)
        out = {"cover": asdict(cov) | {"uncovered_examples": len(cov.uncovered_examples)}}
    rows = []
    for s in _levels(cat):
        r = retraction_step(space, s, samples=cfg.samples, seed=cfg.seed)
        rows.append({"level": s, "samples": r.samples, "worst_bound": r.worst_bound, "delta": r.delta,
                     "net_resolution": r.net_resolution, "ok": r.ok})
    out["retraction"] = rows
    return out


# ---------------------------------------------------------------- Einstein

def einstein_table(cat, cfg):
    space = HomogeneousSpace.from_catalog(cat)
    dec = isotropy_summands(cat.algebra, cat.h, cat.generators, cfg.tol, cfg.seed)
    try:
        res = einstein_search(space, cfg.starts, cfg.budget, cfg.seed, decomposition=dec)
    except NonConvergence as exc:
        return {"summand_dims": dec.dims, "metrics": [], "note": str(exc)}
    rows = [{"sc": m.sc, "residual": m.residual, "summand_scales": m.summand_scales,
             "ratios": scale_ratios(m.summand_scales), "spectrum": spectrum_key(m.op)} for m in res.metrics]
    classes = len({tuple(r["spectrum"]) for r in rows})
    return {"summand_dims": dec.dims, "metrics": rows, "spectral_classes": classes, "note": res.note}


def spectrum_key(P, digits=6):
    """Sorted eigenvalues: equal for metrics related by an automorphism commuting with h."""
    return [round(float(x), digits) for x in np.linalg.eigvalsh(P)]


def run_einstein(source, cfg=Config()):
    cat = resolve_catalog(source, cfg.tol)
    return {"report_version": REPORT_VERSION, "catalog": cat.name, "config": asdict(cfg),
            "einstein": einstein_table(cat, cfg)}


# ----------------------------------------------------------------- certify

def filtering_oracle_agreement(g, samples, seed, tol=1e-7, seeds=()):
    """Three filtering tests on Haar-random and chain-built operators; returns discrepancy counts."""
    rng = np.random.default_rng(seed)
    out = {"samples": 0, "filtering": 0, "near_boundary": 0, "limit_disagrees": 0, "minors_disagree": 0}
    for k in range(samples):
        A = random_trace_one(g.dim, rng) if k % 2 else random_filtering_operator(g, rng, seeds)
        margin = filtering_margin(g, A, tol)
        a = margin <= tol
        # reported separately: disagreements there would point at tolerance, not logic
        out["near_boundary"] += int(abs(margin) < 1e-6 and margin != -math.inf)
        out["samples"] += 1
        out["filtering"] += int(a)
        out["limit_disagrees"] += int(is_filtering_by_limit(g, A, tol=tol) != a)
        out["minors_disagree"] += int(is_filtering_by_minors(g, A, tol) != a)
    out["passed"] = out["limit_disagrees"] == 0 and out["minors_disagree"] == 0
    return out


def suite_filtering(cat, cfg):
    g = cat.algebra
    agree = filtering_oracle_agreement(g, cfg.samples, cfg.seed, seeds=list(cat.items))
    stars = []
    for i in cat.proper_indices():
        r = star_property_check(g, cat.h, cat.generators, cat.items[i], cfg.samples, cfg.seed, tol=cfg.tol)
        stars.append(asdict(r) | {"vacuous": r.vacuous, "ok": r.ok})
    passed = agree["passed"] and all(s["ok"] for s in stars)
    return {"oracles": agree, "stars": stars, "passed": passed}


def suite_butterflies(cat, cfg):
    laws = flag_law_violations(cat)
    out = {"flag_laws": laws, "intersection": {}}
    passed = not any(laws.values())
    for version in (FINE, DRAFT):
        r = intersection_sample_check(ButterflySpace(cat, version, cfg.tol), samples=cfg.samples, seed=cfg.seed)
        out["intersection"][version] = asdict(r)
        passed &= r.violations == 0 and r.sampling_failures == 0
    out["passed"] = bool(passed)
    return out


def suite_retraction(cat, cfg):
    space = ButterflySpace(cat, cfg.version, cfg.tol)
    levels, stars = [], []
    for s in _levels(cat):
        r = retraction_step(space, s, samples=cfg.samples, seed=cfg.seed)
        levels.append({k: v for k, v in asdict(r).items() if k != "trace"} | {"ok": r.ok})
    for i in cat.proper_indices():
        if not space.nonempty((i,)):
            continue
        r = star_retraction(space, i, samples=cfg.samples, seed=cfg.seed)
        stars.append(asdict(r) | {"ok": r.ok})
    return {"levels": levels, "stars": stars,
            "passed": all(x["ok"] for x in levels) and all(x["ok"] for x in stars)}


def suite_cover(cat, cfg):
    try:
        js = JoinStructure(cat, version=cfg.version, tol=cfg.tol)
    except EmptyComplement:
        return {"note": "no nontoral items: X_eps is empty and there is nothing to cover", "passed": True}
    worst, counts = kappa_boundary_check(js, max(1, cfg.samples // 10), cfg.seed)
    ecfg = EpsilonConfig.default(cat, cfg.eps)
    cov = cover_check(js, ecfg, cfg.samples, cfg.seed)
    passed = max(worst.values()) <= 1e-9 and cov.uncovered == 0
    return {"kappa_boundary": {"worst": worst, "counts": counts},
            "cover": asdict(cov), "threshold": ecfg.threshold, "passed": bool(passed)}


def suite_curvature(cat, cfg, pairs=20):
    from .butterflies import all_flags
    from .lattice import toral_mask

    space = HomogeneousSpace.from_catalog(cat)
    rng = np.random.default_rng(cfg.seed)
    sc_q = space.scalar_curvature(np.eye(space.n))
    s_g = s_of_k(cat.algebra, cat.h, cat.algebra.full())
    grad = []
    for _ in range(pairs):
        P = space.random_metric(rng)
        H = space.random_traceless_direction(P, rng)
        if H is not None:
            grad.append(space.gradient_check(P, H)[0])
    mask = toral_mask(cat)
    rays = {"flag": 0, "random": 0, "misclassified": 0}
    for fl in all_flags(cat):
        chain = [cat.items[i] for i in reversed(fl)]
        if not chain[-1].is_full():
            chain.append(cat.algebra.full())
        if len(chain) < 2 or mask[fl[-1]]:
            continue
        ray, _ = flag_ray(space, chain, rng=rng)
        rays["flag"] += 1
        rays["misclassified"] += int(trichotomy_probe(space, ray).verdict != PLUS_INF)
    for _ in range(pairs):
        if len(space.equivariant_basis) < 2:
            break
        V = sum(rng.normal() * E for E in space.equivariant_basis)
        V = V - np.trace(V) / space.n * np.eye(space.n)
        ray = make_ray(space, V / np.linalg.norm(V))
        expected = expected_ray_class(space, ray, 1e-7)
        rays["random"] += 1
        if expected is not None:
            rays["misclassified"] += int(trichotomy_probe(space, ray).verdict != expected)
    worst_grad = max(grad, default=0.0)
    passed = abs(s_g - sc_q) <= 1e-9 * max(1.0, abs(sc_q)) and worst_grad <= 1e-6 and rays["misclassified"] == 0
    return {"sc_Q": sc_q, "s_g": s_g, "gradient_worst_relative_error": worst_grad, "rays": rays,
            "passed": bool(passed)}


_SUITES = {"filtering": suite_filtering, "butterflies": suite_butterflies, "retraction": suite_retraction,
           "cover": suite_cover, "curvature": suite_curvature}


def run_certify(source, suite, cfg=Config()):
    if suite not in _SUITES:
        raise ValidationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    t0 = time.perf_counter()
    cat = close_under_sup(resolve_catalog(source, cfg.tol))
    result = _SUITES[suite](cat, cfg)
    return {"report_version": REPORT_VERSION, "catalog": cat.name, "suite": suite, "config": asdict(cfg),
            "result": result, "passed": result["passed"], "seconds": round(time.perf_counter() - t0, 3)}


# --------------------------------------------------------------- rendering

def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x or x in (float("inf"), float("-inf")):
            return str(x)
        return x
    return obj


def to_markdown(report, title=None):
    lines = [f"# {title or report.get('catalog', 'report')}", ""]

    def emit(key, value, depth):
        if isinstance(value, dict):
            lines.append(f"{'#' * min(depth + 2, 6)} {key}")
            lines.append("")
            for k, v in value.items():
                emit(k, v, depth + 1)
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            cols = list(dict.fromkeys(k for v in value for k in v))
            lines.append(f"{'#' * min(depth + 2, 6)} {key}")
            lines.append("")
            lines.append("| " + " | ".join(cols) + " |")
            lines.append("|" + "---|" * len(cols))
            for v in value:
                lines.append("| " + " | ".join(_cell(v.get(c, "")) for c in cols) + " |")
            lines.append("")
        else:
            lines.append(f"- **{key}**: {_cell(value)}")

    for k, v in to_jsonable(report).items():
        emit(k, v, 0)
    return "\n".join(lines) + "\n"


def _cell(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
