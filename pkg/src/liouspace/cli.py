"""Command line entry point: ``liouspace {run,validate,list}``."""

from __future__ import annotations

import argparse
import sys

from . import scenario as S

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ENGINE = 3


def _load(args):
    overrides = {"dt": args.dt, "T": args.T}
    path = S.resolve(args.scenario)
    return S.parse_scenario(path, overrides if any(v is not None for v in overrides.values()) else None)


def _cmd_list(args) -> int:
    for name, desc in S.list_bundled():
        print(f"{name:28s} {desc}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        sc = _load(args)
    except (S.ScenarioError, FileNotFoundError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{sc.name}: valid {sc.kind} scenario (digest {sc.digest[:16]})")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        sc = _load(args)
    except (S.ScenarioError, FileNotFoundError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        manifest = S.run(sc, args.out, deterministic=args.deterministic)
    except S.ENGINE_ERRORS as exc:
        print(f"{sc.name}: engine abort: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    print(S.dump_json(manifest["summary"]), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liouspace", description="Run superoperator dynamics scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list bundled scenarios").set_defaults(func=_cmd_list)
    for name, func, text in (("run", _cmd_run, "run a scenario"), ("validate", _cmd_validate, "check a scenario file")):
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", help="scenario file or bundled scenario name")
        p.add_argument("--dt", type=float, help="override integrator.dt")
        p.add_argument("--T", type=float, help="override integrator.T")
        p.set_defaults(func=func)
        if name == "run":
            p.add_argument("--out", help="output directory (default: output.directory or runs/<name>)")
            p.add_argument("--deterministic", action="store_true",
                           help="omit wall-clock data so the manifest is byte-stable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
