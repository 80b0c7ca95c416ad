"""Command-line entry point: ``critnet <experiment> [options]``."""
import argparse
import logging
import sys

from .errors import ConvergenceError, ParameterError
from .experiments import KINDS, ExperimentConfig, apply_overrides, env_overrides, load_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPT = 0, 2, 3, 4

log = logging.getLogger("critnet")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON experiment file")
    common.add_argument("--seed", type=int, help="root seed (mandatory here or in the config)")
    common.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    common.add_argument("--out", help="run directory")
    common.add_argument("--format", choices=("csv", "json"), help="data file format")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter; use a__b for nested keys")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="critnet", description="Loss fluctuations at the onset of congestion.")
    sub = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for k in KINDS:
        sp = sub.add_parser(k, parents=[common])
        if k == "accept":
            sp.add_argument("--only", help="comma-separated criterion numbers")
            sp.add_argument("--scale", type=float, help="sample-count multiplier")
    return p


def _mapping(args, environ=None):
    cfg = load_config(args.config) if args.config else {}
    cfg["kind"] = args.kind
    params = dict(cfg.pop("params", {}))
    cfg = {**{k: v for k, v in cfg.items()}, "params": params}
    for k in list(cfg):
        if k not in ("kind", "seed", "workers", "out", "format", "params"):
            params[k] = cfg.pop(k)
    cfg = apply_overrides(cfg, env_overrides(environ))
    for key in ("seed", "workers", "out", "format"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    pairs = []
    for item in args.set:
        if "=" not in item:
            raise ParameterError("--set", f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        pairs.append((f"params__{k}", v))
    if args.kind == "accept":
        if args.only:
            try:
                pairs.append(("params__ids", "[" + args.only + "]"))
            except ValueError:
                raise ParameterError("--only", "expected comma-separated integers") from None
        if args.scale is not None:
            pairs.append(("params__scale", repr(args.scale)))
    return apply_overrides(cfg, pairs)


def main(argv=None, environ=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = ExperimentConfig.from_mapping(_mapping(args, environ))
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        man = run_experiment(cfg, echo=print if cfg.kind == "accept" else None)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wrote %s", cfg.out)
    if cfg.kind == "accept" and man.summary["result"]["failed"]:
        return EXIT_ACCEPT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
