"""Command-line front end.

Subcommands: discretize, rules, pipeline, backanalyze, surrogate, reducts.
Settings resolve in three layers: built-in defaults, then a flat
``key = value`` config file (--config), then a flag of the same name.

Exit codes: 0 success, 1 usage error, 2 data error, 3 accuracy bar not
met (pipeline only; outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DataError, UsageError
from .pipeline import (
    PipelineConfig,
    back_analyze,
    close_open,
    estimate_to_json,
    granular_from_json,
    granulate,
    granulate_observation,
    report_rules_from_json,
    report_to_json,
)
from .rough import reduct_report, reducts
from .rules import RuleConstraints, induce_cover, render_rules
from .som import discretizer_record
from .surrogate import DEFAULT_STEEPNESS, generate_table
from .table import dump_schema, load_schema, load_table, to_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_EL_NOT_MET = 3

# Keys a config file may set; every one has a same-named flag.
CONFIG_KEYS = {
    "granules": int,
    "min_strength": float,
    "max_length": int,
    "max_rules": int,
    "el": float,
    "runs": int,
    "max_closed": int,
    "train_fraction": float,
    "max_open_steps": int,
    "seed": int,
    "semantics": str,
    "decision": str,
}

DEFAULTS = {
    "granules": 3,
    "min_strength": 0.60,
    "max_length": 2,
    "max_rules": 5,
    "el": 0.80,
    "runs": 1,
    "max_closed": 2,
    "train_fraction": 0.7,
    "max_open_steps": 10,
    "seed": 0,
    "semantics": "cumulative",
    "decision": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_config_file(text: str) -> dict:
    """Flat ``key = value`` lines; blank lines and # comments allowed."""
    out = {}
    for ln_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {ln_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise DataError(f"config line {ln_no}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise DataError(f"config line {ln_no}: bad value for {key!r}: {value!r}") from None
    return out


def _resolve(args) -> dict:
    """defaults <- config file <- explicit flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(parse_config_file(_read(args.config)))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def _load_inputs(args):
    schema = load_schema(_read(args.schema))
    return load_table(_read(args.data), schema)


def _constraints(s: dict) -> RuleConstraints:
    return RuleConstraints(
        min_strength=s["min_strength"], max_length=s["max_length"], max_rules=s["max_rules"]
    )


def _pipeline_config(s: dict) -> PipelineConfig:
    return PipelineConfig(
        runs=s["runs"],
        max_closed=s["max_closed"],
        el=s["el"],
        constraints=_constraints(s),
        train_fraction=s["train_fraction"],
        granules=s["granules"],
        max_open_steps=s["max_open_steps"],
        seed=s["seed"],
        semantics=s["semantics"],
    )


def _need_decision(table, settings) -> str:
    decision = settings.get("decision")
    if decision is None:
        names = table.decision_names
        if len(names) != 1:
            raise UsageError(
                f"--decision required: table has decision attributes {names}"
            )
        return names[0]
    return decision


def cmd_discretize(args) -> int:
    s = _resolve(args)
    table = _load_inputs(args)
    g = granulate(table, granules=s["granules"], seed=s["seed"])
    out = Path(args.out)
    records = "".join(discretizer_record(g.discretizers[n]) + "\n" for n in table.names)
    _write(out / "discretizers.txt", records)
    _write(out / "granulated.csv", to_csv(g))
    print(f"wrote {out / 'discretizers.txt'} and {out / 'granulated.csv'}", file=sys.stderr)
    return EXIT_OK


def cmd_rules(args) -> int:
    s = _resolve(args)
    table = _load_inputs(args)
    decision = _need_decision(table, s)
    g = granulate(table, granules=s["granules"], seed=s["seed"])
    rs = induce_cover(g, decision, _constraints(s), s["semantics"])
    _write(Path(args.out) / "rules.txt", render_rules(rs))
    print(
        f"{len(rs.rules)} rule(s), {len(rs.uncovered)} uncovered object(s)", file=sys.stderr
    )
    return EXIT_OK


def cmd_pipeline(args) -> int:
    s = _resolve(args)
    table = _load_inputs(args)
    decision = _need_decision(table, s)
    report = close_open(table, decision, _pipeline_config(s))
    out = Path(args.out)
    _write(out / "report.json", report_to_json(report))
    _write(out / "rules.txt", render_rules(report.best_rules))
    status = "met" if report.el_met else "NOT met"
    print(
        f"accuracy bar {status}: best {report.best_accuracy:.3f} over "
        f"{report.total_iterations} iteration(s); wrote {out / 'report.json'}",
        file=sys.stderr,
    )
    return EXIT_OK if report.el_met else EXIT_EL_NOT_MET


def cmd_backanalyze(args) -> int:
    try:
        doc = json.loads(_read(args.report))
        rules = report_rules_from_json(doc)
        granular = granular_from_json(doc)
        decision = doc["decision"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed report file: {exc}") from None
    disc = granular.discretizers.get(decision)
    if disc is None:
        raise DataError(f"report carries no quantizer for {decision!r}")
    granule = granulate_observation(disc, args.observe)
    est = back_analyze(rules, (decision, granule), granular)
    text = estimate_to_json(est)
    if args.out:
        _write(Path(args.out), text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if est.no_match:
        print("no rule matches the observed granule", file=sys.stderr)
    return EXIT_OK


def cmd_surrogate(args) -> int:
    s = _resolve(args)
    ranges = None
    if args.ranges:
        try:
            raw = json.loads(_read(args.ranges))
            ranges = {k: (float(v[0]), float(v[1])) for k, v in raw.items()}
        except (ValueError, TypeError, IndexError) as exc:
            raise DataError(f"malformed ranges file: {exc}") from None
    table = generate_table(
        ranges=ranges, count=args.count, seed=s["seed"], steepness=args.steepness
    )
    out = Path(args.out)
    _write(out / "runs.csv", to_csv(table))
    _write(out / "schema.json", dump_schema(list(table.specs)))
    print(f"wrote {out / 'runs.csv'} and {out / 'schema.json'}", file=sys.stderr)
    return EXIT_OK


def cmd_reducts(args) -> int:
    s = _resolve(args)
    table = _load_inputs(args)
    decision = s.get("decision")
    g = granulate(table, granules=s["granules"], seed=s["seed"])
    rs = reducts(g, args.mode, decision=decision)
    text = reduct_report(rs)
    if args.out:
        _write(Path(args.out), text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="somrough", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_settings(p, keys):
        p.add_argument("--config", help="flat key = value settings file")
        for key in keys:
            p.add_argument(f"--{key}", type=CONFIG_KEYS[key], default=None)

    common_rule_keys = ("granules", "min_strength", "max_length", "max_rules", "semantics")

    p = sub.add_parser("discretize", help="fit quantizers and emit the granulated table")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    add_settings(p, ("granules", "seed"))
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("rules", help="induce a rule cover on the full table")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    add_settings(p, common_rule_keys + ("seed", "decision"))
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("pipeline", help="run the close-open iteration")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    add_settings(p, tuple(CONFIG_KEYS))
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("backanalyze", help="invert an observation with a pipeline report")
    p.add_argument("--report", required=True)
    p.add_argument("--observe", type=float, required=True, help="measured decision value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_backanalyze)

    p = sub.add_parser("surrogate", help="generate a synthetic run table")
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--ranges", help="JSON file: {parameter: [low, high]}")
    p.add_argument("--steepness", type=float, default=DEFAULT_STEEPNESS)
    p.add_argument("--out", required=True)
    add_settings(p, ("seed",))
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("reducts", help="reduct and core report for a table")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--mode", choices=("plain", "decision_relative"), default="decision_relative")
    p.add_argument("--out")
    add_settings(p, ("granules", "seed", "decision"))
    p.set_defaults(func=cmd_reducts)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
