"""Command line: ``einflag analyze|certify|einstein|presets|export``."""

import argparse
import json
import sys

from .catalog_io import catalog_to_dict
from .errors import CheckViolation, ValidationError
from .pipeline import SUITES, Config, resolve_catalog, run_analyze, run_certify, run_einstein
from .pipeline import to_jsonable, to_markdown
from .presets import PRESET_NAMES, load_preset

EXIT_OK, EXIT_VALIDATION, EXIT_CHECK = 0, 2, 3


def _common(p, samples):
    p.add_argument("catalog", help="catalog JSON file or preset name")
    p.add_argument("--tol", type=float, default=None, help="numerical tolerance (default 1e-9)")
    p.add_argument("--eps", type=float, default=None, help="ε of the X_ε extension (default 1/(2n(n-1)))")
    p.add_argument("--samples", type=int, default=samples, help="samples per sampled check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--field", choices=("Q", "Z2"), default="Q", help="coefficient field for homology")
    p.add_argument("--version", choices=("fine", "draft"), default="fine", help="butterfly version")
    p.add_argument("--report", choices=("json", "md"), default="json")
    p.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="einflag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="classification, homology, graphs, sampled checks and verdict")
    _common(a, samples=20)
    a.add_argument("--starts", type=int, default=10, help="Einstein search starts (0 skips the search)")
    a.add_argument("--budget", type=int, default=200, help="function evaluations per polish")

    c = sub.add_parser("certify", help="run one invariant suite and report pass/fail")
    _common(c, samples=100)
    c.add_argument("--suite", choices=SUITES, required=True)

    e = sub.add_parser("einstein", help="multi-start search for invariant Einstein metrics")
    _common(e, samples=0)
    e.add_argument("--starts", type=int, default=20)
    e.add_argument("--budget", type=int, default=200)

    sub.add_parser("presets", help="list built-in catalogs")
    x = sub.add_parser("export", help="write a catalog (e.g. a preset) as JSON")
    x.add_argument("catalog")
    x.add_argument("--output", "-o", default=None)
    return parser


def _config(args):
    cfg = Config(samples=args.samples, seed=args.seed, field=args.field, version=args.version, eps=args.eps)
    if args.tol is not None:
        cfg.tol = args.tol
    for name in ("starts", "budget"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


def _emit(report, args):
    text = to_markdown(report) if args.report == "md" else json.dumps(to_jsonable(report), indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in PRESET_NAMES:
                print(f"{name:18s} {load_preset(name).description}")
            return EXIT_OK
        if args.command == "export":
            text = json.dumps(catalog_to_dict(resolve_catalog(args.catalog)), indent=1)
            if args.output:
                with open(args.output, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return EXIT_OK
        cfg = _config(args)
        if args.command == "analyze":
            report = run_analyze(args.catalog, cfg)
        elif args.command == "einstein":
            report = run_einstein(args.catalog, cfg)
        else:
            report = run_certify(args.catalog, args.suite, cfg)
        _emit(report, args)
        if args.command == "certify" and not report["passed"]:
            return EXIT_CHECK
        return EXIT_OK
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CheckViolation as exc:
        print(f"check violation: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
