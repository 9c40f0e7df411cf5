"""The close-open iteration and observation-to-parameter back analysis.

One run granulates the whole table once, then alternates closed-world
trials (fresh random train/test splits, rules induced under the current
rule budget) with open-world budget moves: a budget that reaches the
held-out accuracy bar is rewarded with a tighter budget, a budget that
fails the bar on k consecutive splits is relaxed by one. The loop settles
on the smallest workable budget, or reports best-so-far with a not-met
flag when the bar is out of reach.

Back analysis inverts a monitored observation: granulate it with the
decision attribute's quantizer, pick the rules whose decision band covers
that granule, and hand back their condition sides as alternative raw-unit
parameter bundles, with a reduct-based sensitivity ranking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, UsageError
from .rough import reducts
from .rules import (
    Condition,
    DecisionPart,
    Rule,
    RuleConstraints,
    RuleSet,
    accuracy,
    induce_cover,
    render_rule,
)
from .som import (
    Discretizer,
    SomConfig,
    assign_granule,
    fit_table_discretizer,
    reduce_prototypes,
    train,
)
from .table import DecisionTable, GranularTable, scale_minmax, split_random, transform_scale

# Documented reconstruction notes echoed into every report.
POLICY_NOTES = (
    "budget loop: start at one rule, k fresh splits per budget level, "
    "relax budget by one after k misses, tighten by one after a hit, stop "
    "at the smallest workable budget or at the adjustment cap",
    "quantizers are fitted once per run on the full table, so train and "
    "test splits share one granule vocabulary",
)


@dataclass(frozen=True)
class PipelineConfig:
    runs: int = 1  # independent outer runs, each with derived seed
    max_closed: int = 2  # splits tried per budget level before relaxing
    el: float = 0.80  # held-out accuracy bar
    constraints: RuleConstraints = field(default_factory=RuleConstraints)
    train_fraction: float = 0.7
    granules: int = 3
    max_open_steps: int = 10  # budget adjustments allowed per run
    seed: int = 0
    semantics: str = "cumulative"
    reduce_grid: tuple[int, int] | None = None  # optional prototype reduction

    def __post_init__(self):
        if self.runs < 1 or self.max_closed < 1:
            raise UsageError("runs and max_closed must be >= 1")
        if not 0.0 <= self.el <= 1.0:
            raise UsageError("el must be in [0, 1]")
        if self.granules < 2:
            raise UsageError("granules must be >= 2")
        if self.max_open_steps < 0:
            raise UsageError("max_open_steps must be >= 0")

    @property
    def max_iterations(self) -> int:
        """Hard cap on closed-open iterations per run."""
        return 1 + self.max_closed * self.max_open_steps


@dataclass(frozen=True)
class Iteration:
    run: int
    index: int  # 1-based within the run
    split_seed: int
    budget: int
    n_rules: int
    accuracy: float
    accepted: bool


@dataclass(frozen=True)
class RunReport:
    config: PipelineConfig
    decision: str
    iterations: tuple[Iteration, ...]
    best_rules: RuleSet
    best_accuracy: float
    best_iteration: Iteration
    discretizers: dict  # of the best run, keyed by attribute
    granular: GranularTable  # of the best run
    el_met: bool
    stop_reason: str
    notes: tuple[str, ...] = POLICY_NOTES

    @property
    def total_iterations(self) -> int:
        return len(self.iterations)


@dataclass(frozen=True)
class Interval:
    attribute: str
    lo: float | None  # None = unbounded below
    hi: float | None  # None = unbounded above

    def contains(self, v: float) -> bool:
        if self.lo is not None and v < self.lo:
            return False
        if self.hi is not None and v > self.hi:
            return False
        return True


@dataclass(frozen=True)
class ParameterEstimate:
    """Back-analysis output: alternative condition bundles, one per
    matched rule, plus a sensitivity ranking of the condition attributes."""

    decision: str
    observed_granule: int
    bundles: tuple[tuple[Interval, ...], ...]
    matched_rules: tuple[Rule, ...]
    sensitivity: tuple[tuple[str, bool, int], ...]  # (attribute, in_core, frequency)
    no_match: bool


def granulate(
    table: DecisionTable, granules: int = 3, seed: int = 0, discretizers: dict | None = None
) -> GranularTable:
    """Quantize every column; label 1 is always the highest value band.

    Discretizers are fitted per attribute with seeds derived from the base
    seed, or reused when passed in (e.g. to granulate test data with the
    training vocabulary).
    """
    if discretizers is None:
        discretizers = {}
        for idx, name in enumerate(table.names):
            discretizers[name] = fit_table_discretizer(
                table, name, granules, seed + 7919 * idx
            )
    rows = []
    for row in table.rows:
        rows.append(
            tuple(
                assign_granule(discretizers[s.name], v) if s.name in discretizers else None
                for s, v in zip(table.specs, row)
            )
        )
    return GranularTable(
        specs=table.specs,
        rows=tuple(rows),
        object_ids=table.object_ids,
        discretizers=discretizers,
    )


def close_open(table: DecisionTable, decision: str, cfg: PipelineConfig) -> RunReport:
    """Balance rule-budget simplicity against held-out accuracy.

    Runs are independent; the reported best is the accepted iteration with
    the highest accuracy (ties: fewer rules, then smaller total length,
    then earlier), falling back to best-so-far with el_met=False when no
    iteration reaches the bar.
    """
    if len(table) == 0:
        raise DataError("cannot run the pipeline on an empty table")
    if decision not in table.decision_names:
        raise UsageError(f"{decision!r} is not a decision attribute")

    iterations: list[Iteration] = []
    candidates = []  # (sort_key, accepted, iteration, ruleset, run_artifacts)
    stop_reasons = []

    for run in range(cfg.runs):
        run_seed = cfg.seed + run
        gtable = granulate(table, cfg.granules, seed=run_seed)
        artifacts = (gtable.discretizers, gtable)
        rng = np.random.default_rng(run_seed)

        budget = 1
        fails_here = 0
        tightening = False  # reached this budget by coming down from a hit
        open_steps = 0
        stop = "iteration cap"
        for index in range(1, cfg.max_iterations + 1):
            split_seed = int(rng.integers(2**31 - 1))
            train_t, test_t = split_random(gtable, cfg.train_fraction, split_seed)
            if cfg.reduce_grid is not None:
                train_t = reduce_train(table, train_t, cfg.reduce_grid, split_seed)
            cons = replace(cfg.constraints, max_rules=budget)
            rs = induce_cover(train_t, decision, cons, cfg.semantics)
            acc = accuracy(rs, test_t, decision)
            accepted = acc >= cfg.el
            it = Iteration(
                run=run,
                index=index,
                split_seed=split_seed,
                budget=budget,
                n_rules=len(rs.rules),
                accuracy=acc,
                accepted=accepted,
            )
            iterations.append(it)
            total_len = sum(r.length for r in rs.rules)
            candidates.append(
                ((-acc, len(rs.rules), total_len, len(iterations)), accepted, it, rs, artifacts)
            )

            if accepted:
                if budget <= 1:
                    stop = "stable success at minimal budget"
                    break
                if open_steps >= cfg.max_open_steps:
                    stop = "budget-adjustment cap"
                    break
                budget -= 1
                open_steps += 1
                fails_here = 0
                tightening = True
            else:
                fails_here += 1
                if fails_here < cfg.max_closed:
                    continue
                if tightening:
                    stop = "stable success above this budget"
                    break
                if budget >= cfg.constraints.max_rules:
                    stop = "budget bound reached"
                    break
                if open_steps >= cfg.max_open_steps:
                    stop = "budget-adjustment cap"
                    break
                budget += 1
                open_steps += 1
                fails_here = 0
        stop_reasons.append(f"run {run}: {stop}")

    accepted_pool = [c for c in candidates if c[1]]
    pool = accepted_pool or candidates
    key, _, best_it, best_rs, (discs, gtable) = min(pool, key=lambda c: c[0])
    return RunReport(
        config=cfg,
        decision=decision,
        iterations=tuple(iterations),
        best_rules=best_rs,
        best_accuracy=best_it.accuracy,
        best_iteration=best_it,
        discretizers=discs,
        granular=gtable,
        el_met=bool(accepted_pool),
        stop_reason="; ".join(stop_reasons),
    )


def reduce_train(
    raw: DecisionTable, train_granular: GranularTable, grid: tuple[int, int], seed: int
) -> GranularTable:
    """Optional prototype reduction of a training split.

    A small map is trained on the split's scaled condition rows; each
    non-empty node becomes one synthetic training object whose condition
    labels come from quantizing the prototype vector and whose decision
    labels are the majority vote of its members (ties to the smaller,
    higher-valued label).
    """
    ids = list(train_granular.object_ids)
    raw_train = raw.subset(ids)
    conds = raw.condition_names
    cols = {}
    scaled_cols = {}
    for name in conds:
        spec = raw.spec(name)
        transformed = transform_scale(raw_train.column(name), spec.scale)
        scaled, (lo, hi) = scale_minmax(transformed)
        cols[name] = (lo, hi, spec.scale)
        scaled_cols[name] = [np.nan if v is None else v for v in scaled]
    x = np.array([scaled_cols[n] for n in conds], dtype=float).T

    som = train(x, SomConfig(grid=grid, seed=seed))
    protos = reduce_prototypes(som, x)

    discs = train_granular.discretizers
    rows = []
    for weight, members in protos:
        cells = []
        for s in train_granular.specs:
            if s.role == "condition":
                lo, hi, scale = cols[s.name]
                v01 = float(weight[conds.index(s.name)])
                raw_v = v01 * (hi - lo) + lo if hi > lo else lo
                if scale == "log10":
                    raw_v = 10.0**raw_v
                cells.append(assign_granule(discs[s.name], raw_v))
            else:
                labels = [
                    train_granular.rows[m][train_granular.col_index(s.name)] for m in members
                ]
                labels = [l for l in labels if l is not None]
                if not labels:
                    cells.append(None)
                else:
                    counts = {}
                    for l in labels:
                        counts[l] = counts.get(l, 0) + 1
                    top = max(counts.values())
                    cells.append(min(l for l, c in counts.items() if c == top))
        rows.append(tuple(cells))
    return GranularTable(
        specs=train_granular.specs,
        rows=tuple(rows),
        object_ids=tuple(range(len(rows))),
        discretizers=discs,
    )


def granulate_observation(disc: Discretizer, measured: float) -> int:
    """Granule of a monitored value; out-of-range values take the nearest
    extreme band."""
    if measured is None or not np.isfinite(measured):
        raise UsageError("measured value must be finite")
    label = assign_granule(disc, measured)
    assert label is not None
    return label


def back_analyze(
    rs: RuleSet,
    observed: tuple[str, int],
    granular: GranularTable | None = None,
) -> ParameterEstimate:
    """Invert an observed decision granule into parameter bundles.

    Every rule whose decision band covers the observed granule contributes
    one bundle of raw-unit intervals; bundles are alternative (disjunctive)
    explanations. When the granulated table is available, reduct cores mark
    which attributes the sensitivity ranking flags first.
    """
    if not rs.rules:
        raise UsageError("cannot back-analyze with an empty rule set")
    attr, label = observed
    matched = tuple(
        r for r in rs.rules if r.decision.attribute == attr and r.decision.covers(label)
    )
    bundles = tuple(
        tuple(Interval(c.attribute, c.lo, c.hi) for c in rule.conditions) for rule in matched
    )

    freq: dict[str, int] = {}
    for rule in matched:
        for c in rule.conditions:
            freq[c.attribute] = freq.get(c.attribute, 0) + 1

    core = frozenset()
    universe = sorted(freq)
    if granular is not None:
        core = reducts(granular, "decision_relative", decision=attr).core
        universe = sorted(set(universe) | set(granular.condition_names))
    ranked = sorted(
        ((a, a in core, freq.get(a, 0)) for a in universe),
        key=lambda e: (not e[1], -e[2], e[0]),
    )

    return ParameterEstimate(
        decision=attr,
        observed_granule=label,
        bundles=bundles,
        matched_rules=matched,
        sensitivity=tuple(ranked),
        no_match=not matched,
    )


def sensitivity(granular: GranularTable, decision: str) -> tuple[tuple[str, bool, int], ...]:
    """Condition attributes ranked by reduct membership.

    Key: core membership first, then how many reducts use the attribute,
    then name. The reduct set acts as a cheap global sensitivity screen:
    core attributes are indispensable to reproduce the decision structure.
    """
    rs = reducts(granular, "decision_relative", decision=decision)
    freq = {a: sum(1 for r in rs.reducts if a in r) for a in granular.condition_names}
    return tuple(
        sorted(
            ((a, a in rs.core, freq[a]) for a in granular.condition_names),
            key=lambda e: (not e[1], -e[2], e[0]),
        )
    )


# --- JSON serialization ----------------------------------------------------


def _condition_dict(c: Condition) -> dict:
    return {
        "attribute": c.attribute,
        "lo": c.lo,
        "hi": c.hi,
        "labels": sorted(c.labels) if c.labels is not None else None,
    }


def _rule_dict(r: Rule) -> dict:
    return {
        "conditions": [_condition_dict(c) for c in r.conditions],
        "decision": {
            "attribute": r.decision.attribute,
            "kind": r.decision.kind,
            "granule": r.decision.granule,
        },
        "support": r.support,
        "strength": r.strength,
    }


def rule_from_dict(d: dict) -> Rule:
    conds = tuple(
        Condition(
            attribute=c["attribute"],
            lo=c["lo"],
            hi=c["hi"],
            labels=frozenset(c["labels"]) if c.get("labels") is not None else None,
        )
        for c in d["conditions"]
    )
    dec = d["decision"]
    return Rule(
        conditions=conds,
        decision=DecisionPart(dec["attribute"], dec["kind"], dec["granule"]),
        support=d.get("support", 0),
        strength=d.get("strength", 0.0),
    )


def _discretizer_dict(d: Discretizer) -> dict:
    return {"name": d.name, "scale": d.scale, "centers": list(d.centers), "cuts": list(d.cuts)}


def discretizer_from_dict(d: dict) -> Discretizer:
    return Discretizer(
        name=d["name"], scale=d["scale"], centers=tuple(d["centers"]), cuts=tuple(d["cuts"])
    )


def report_to_json(report: RunReport) -> str:
    cfg = report.config
    doc = {
        "config": {
            "runs": cfg.runs,
            "max_closed": cfg.max_closed,
            "el": cfg.el,
            "min_strength": cfg.constraints.min_strength,
            "max_length": cfg.constraints.max_length,
            "max_rules": cfg.constraints.max_rules,
            "train_fraction": cfg.train_fraction,
            "granules": cfg.granules,
            "max_open_steps": cfg.max_open_steps,
            "seed": cfg.seed,
            "semantics": cfg.semantics,
        },
        "decision": report.decision,
        "el_met": report.el_met,
        "stop_reason": report.stop_reason,
        "notes": list(report.notes),
        "iterations": [
            {
                "run": it.run,
                "index": it.index,
                "split_seed": it.split_seed,
                "budget": it.budget,
                "n_rules": it.n_rules,
                "accuracy": it.accuracy,
                "accepted": it.accepted,
            }
            for it in report.iterations
        ],
        "best": {
            "accuracy": report.best_accuracy,
            "run": report.best_iteration.run,
            "split_seed": report.best_iteration.split_seed,
            "budget": report.best_iteration.budget,
            "semantics": report.best_rules.semantics,
            "uncovered": list(report.best_rules.uncovered),
            "rules": [_rule_dict(r) for r in report.best_rules.rules],
            "rules_text": [
                render_rule(r, i) for i, r in enumerate(report.best_rules.rules, start=1)
            ],
        },
        "discretizers": {
            name: _discretizer_dict(d) for name, d in sorted(report.discretizers.items())
        },
        "granular": {
            "attributes": report.granular.names,
            "roles": [s.role for s in report.granular.specs],
            "object_ids": list(report.granular.object_ids),
            "rows": [list(row) for row in report.granular.rows],
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def report_rules_from_json(doc: dict) -> RuleSet:
    best = doc["best"]
    cons = RuleConstraints(
        min_strength=doc["config"]["min_strength"],
        max_length=doc["config"]["max_length"],
        max_rules=doc["config"]["max_rules"],
    )
    return RuleSet(
        rules=tuple(rule_from_dict(r) for r in best["rules"]),
        constraints=cons,
        uncovered=tuple(best.get("uncovered", ())),
        semantics=best.get("semantics", "cumulative"),
    )


def granular_from_json(doc: dict) -> GranularTable:
    """Rebuild the granulated table (and quantizers) embedded in a report."""
    from .table import AttributeSpec

    discs = {
        name: discretizer_from_dict(d) for name, d in doc.get("discretizers", {}).items()
    }
    g = doc["granular"]
    specs = tuple(
        AttributeSpec(name, role) for name, role in zip(g["attributes"], g["roles"])
    )
    rows = tuple(tuple(None if v is None else int(v) for v in row) for row in g["rows"])
    return GranularTable(
        specs=specs,
        rows=rows,
        object_ids=tuple(g["object_ids"]),
        discretizers=discs,
    )


def estimate_to_json(est: ParameterEstimate) -> str:
    doc = {
        "decision": est.decision,
        "observed_granule": est.observed_granule,
        "no_match": est.no_match,
        "bundles": [
            [{"attribute": iv.attribute, "lo": iv.lo, "hi": iv.hi} for iv in bundle]
            for bundle in est.bundles
        ],
        "matched_rules": [_rule_dict(r) for r in est.matched_rules],
        "sensitivity": [
            {"attribute": a, "core": c, "frequency": f} for a, c, f in est.sensitivity
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
