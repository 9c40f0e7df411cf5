"""Rough-set mathematics over attribute-value tables.

Indiscernibility partitions, lower and upper approximations, quality of
approximation, the pairwise discernibility matrix, its Boolean function
(CNF whose prime implicants are the reducts), and a brute-force subset
enumeration kept as an independent oracle for all of it.

Objects agreeing on every attribute of a subset B fall into one block;
a missing value is tolerant (it matches anything), and blocks are then
grown greedily in object-id order so the result stays deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import UsageError
from .table import DecisionTable

# Exhaustive subset search is exponential; instances here are small by
# construction, anything bigger is a caller mistake.
MAX_EXHAUSTIVE_ATTRS = 16


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of object ids covering the universe."""

    blocks: tuple[frozenset, ...]
    universe: frozenset

    def block_of(self, object_id: int) -> frozenset:
        for b in self.blocks:
            if object_id in b:
                return b
        raise UsageError(f"object {object_id} not in universe")

    def as_set(self) -> frozenset:
        return frozenset(self.blocks)


@dataclass(frozen=True)
class Approximation:
    lower: frozenset
    upper: frozenset

    @property
    def boundary(self) -> frozenset:
        return self.upper - self.lower


@dataclass(frozen=True)
class DiscernibilityMatrix:
    """Attribute sets separating object pairs (i > j), by object id."""

    entries: dict  # (id_i, id_j) -> frozenset of attribute names
    universe: frozenset
    mode: str


@dataclass(frozen=True)
class BoolFormula:
    """A discernibility function: absorbed CNF and its prime implicants."""

    cnf: frozenset  # of frozensets (clauses)
    dnf: frozenset  # of frozensets (implicants, i.e. minimal hitting sets)


@dataclass(frozen=True)
class ReductSet:
    reducts: tuple[frozenset, ...]
    core: frozenset


def _tolerant_equal(a, b) -> bool:
    return a is None or b is None or a == b


def partition_by(table: DecisionTable, attrs) -> Partition:
    """Blocks of objects indiscernible on every attribute in attrs.

    With missing values the relation is a tolerance, not an equivalence;
    each object joins the first existing block it is tolerant with every
    member of, scanning objects in id order.
    """
    attrs = list(attrs)
    cols = [table.column(a) for a in attrs]  # raises UsageError on unknown names
    n = len(table)
    vectors = [tuple(col[i] for col in cols) for i in range(n)]
    ids = table.object_ids

    if not any(v is None for vec in vectors for v in vec):
        groups: dict[tuple, list] = {}
        for oid, vec in zip(ids, vectors):
            groups.setdefault(vec, []).append(oid)
        blocks = [frozenset(members) for members in groups.values()]
    else:
        block_members: list[list[int]] = []
        block_vectors: list[list[tuple]] = []
        order = sorted(range(n), key=lambda i: ids[i])
        for i in order:
            vec = vectors[i]
            for members, vecs in zip(block_members, block_vectors):
                if all(
                    all(_tolerant_equal(a, b) for a, b in zip(vec, other)) for other in vecs
                ):
                    members.append(ids[i])
                    vecs.append(vec)
                    break
            else:
                block_members.append([ids[i]])
                block_vectors.append([vec])
        blocks = [frozenset(m) for m in block_members]

    blocks.sort(key=min)
    return Partition(blocks=tuple(blocks), universe=frozenset(ids))


def lower_approx(p: Partition, x) -> frozenset:
    """Union of blocks entirely inside x."""
    x = frozenset(x)
    return frozenset(i for b in p.blocks if b <= x for i in b)


def upper_approx(p: Partition, x) -> frozenset:
    """Union of blocks meeting x."""
    x = frozenset(x)
    return frozenset(i for b in p.blocks if b & x for i in b)


def approximate(p: Partition, x) -> Approximation:
    return Approximation(lower=lower_approx(p, x), upper=upper_approx(p, x))


def _pure(table: DecisionTable, block: frozenset, decision_attrs: list[str]) -> bool:
    """A block is pure when, per decision attribute, all present values agree."""
    for d in decision_attrs:
        seen = {table.value(i, d) for i in block}
        seen.discard(None)
        if len(seen) > 1:
            return False
    return True


def _decision_attrs(table: DecisionTable, decision) -> list[str]:
    if decision is None:
        names = table.decision_names
        if not names:
            raise UsageError("table has no decision attribute")
        return names
    if isinstance(decision, str):
        decision = [decision]
    return [table.spec(d).name for d in decision]


def positive_region(table: DecisionTable, attrs, decision=None) -> frozenset:
    """Objects whose block under attrs is decision-pure."""
    d_attrs = _decision_attrs(table, decision)
    p = partition_by(table, attrs)
    return frozenset(i for b in p.blocks if _pure(table, b, d_attrs) for i in b)


def approx_quality(table: DecisionTable, attrs, decision=None) -> float:
    """Fraction of the universe whose decision is determined by attrs."""
    if len(table) == 0:
        return 1.0
    return len(positive_region(table, attrs, decision)) / len(table)


def disc_matrix(
    table: DecisionTable, mode: str = "decision_relative", decision=None
) -> DiscernibilityMatrix:
    """Pairwise attribute sets that tell objects apart.

    plain: every pair, every attribute (conditions and decisions alike).

    decision_relative: condition attributes only, and only for pairs whose
    separation the positive region depends on: both objects positive with
    different decisions, or exactly one of them positive. Hitting these
    entries is exactly what preserves the quality of approximation.
    """
    ids = list(table.object_ids)
    entries = {}
    if mode == "plain":
        attrs = table.names
        cols = {a: table.column(a) for a in attrs}
        pos_of = {oid: k for k, oid in enumerate(ids)}
        for j_idx, i_idx in itertools.combinations(range(len(ids)), 2):
            i, j = ids[i_idx], ids[j_idx]
            diff = frozenset(
                a
                for a in attrs
                if cols[a][pos_of[i]] is not None
                and cols[a][pos_of[j]] is not None
                and cols[a][pos_of[i]] != cols[a][pos_of[j]]
            )
            entries[(max(i, j), min(i, j))] = diff
    elif mode == "decision_relative":
        conds = table.condition_names
        d_attrs = _decision_attrs(table, decision)
        pos = positive_region(table, conds, d_attrs)
        cols = {a: table.column(a) for a in conds}
        pos_of = {oid: k for k, oid in enumerate(ids)}

        def dvec(oid):
            return tuple(table.value(oid, d) for d in d_attrs)

        for j_idx, i_idx in itertools.combinations(range(len(ids)), 2):
            i, j = ids[i_idx], ids[j_idx]
            in_pos_i, in_pos_j = i in pos, j in pos
            if in_pos_i and in_pos_j:
                needed = dvec(i) != dvec(j)
            else:
                needed = in_pos_i != in_pos_j
            if not needed:
                entries[(max(i, j), min(i, j))] = frozenset()
                continue
            entries[(max(i, j), min(i, j))] = frozenset(
                a
                for a in conds
                if cols[a][pos_of[i]] is not None
                and cols[a][pos_of[j]] is not None
                and cols[a][pos_of[i]] != cols[a][pos_of[j]]
            )
    else:
        raise UsageError(f"unknown discernibility mode {mode!r}")
    return DiscernibilityMatrix(entries=entries, universe=frozenset(ids), mode=mode)


def _absorb(sets) -> frozenset:
    """Drop every set that contains another one (keep the minimal sets)."""
    by_size = sorted(set(sets), key=len)
    kept: list[frozenset] = []
    for s in by_size:
        if not any(k <= s for k in kept):
            kept.append(s)
    return frozenset(kept)


def disc_function(matrix: DiscernibilityMatrix) -> BoolFormula:
    """CNF over the non-empty matrix entries, and its prime implicants.

    The DNF comes from clause-by-clause distribution with absorption,
    shortest clauses first; since every literal is positive the implicants
    are the minimal hitting sets of the clause family.
    """
    clauses = _absorb(c for c in matrix.entries.values() if c)
    ordered = sorted(clauses, key=lambda c: (len(c), tuple(sorted(c))))
    implicants: set[frozenset] = {frozenset()}
    for clause in ordered:
        grown: set[frozenset] = set()
        for imp in implicants:
            if imp & clause:
                grown.add(imp)
            else:
                for a in clause:
                    grown.add(imp | {a})
        implicants = set(_absorb(grown))
    return BoolFormula(cnf=clauses, dnf=frozenset(implicants))


def reducts_from_formula(f: BoolFormula) -> ReductSet:
    reducts = tuple(sorted(f.dnf, key=lambda r: (len(r), tuple(sorted(r)))))
    core = frozenset.intersection(*reducts) if reducts else frozenset()
    return ReductSet(reducts=reducts, core=core)


def reducts(table: DecisionTable, mode: str = "decision_relative", decision=None) -> ReductSet:
    """Reducts through the discernibility function."""
    return reducts_from_formula(disc_function(disc_matrix(table, mode, decision)))


def reducts_exhaustive(
    table: DecisionTable, mode: str = "decision_relative", decision=None
) -> ReductSet:
    """Independent oracle: enumerate attribute subsets directly.

    plain: minimal subsets inducing the same partition as all attributes.
    decision_relative: minimal condition subsets preserving the quality of
    approximation of the full condition set.
    """
    if mode == "plain":
        attrs = table.names
        if len(attrs) > MAX_EXHAUSTIVE_ATTRS:
            raise UsageError(f"exhaustive search capped at {MAX_EXHAUSTIVE_ATTRS} attributes")
        target = partition_by(table, attrs).as_set()

        def preserves(subset):
            return partition_by(table, subset).as_set() == target

    elif mode == "decision_relative":
        attrs = table.condition_names
        if len(attrs) > MAX_EXHAUSTIVE_ATTRS:
            raise UsageError(f"exhaustive search capped at {MAX_EXHAUSTIVE_ATTRS} attributes")
        d_attrs = _decision_attrs(table, decision)
        target = len(positive_region(table, attrs, d_attrs))

        def preserves(subset):
            return len(positive_region(table, subset, d_attrs)) == target

    else:
        raise UsageError(f"unknown discernibility mode {mode!r}")

    minimal: list[frozenset] = []
    for size in range(len(attrs) + 1):
        for combo in itertools.combinations(attrs, size):
            cand = frozenset(combo)
            if any(m <= cand for m in minimal):
                continue
            if preserves(cand):
                minimal.append(cand)
    reds = tuple(sorted(minimal, key=lambda r: (len(r), tuple(sorted(r)))))
    core = frozenset.intersection(*reds) if reds else frozenset()
    return ReductSet(reducts=reds, core=core)


def reduct_report(rs: ReductSet) -> str:
    """One reduct per line as sorted names, then the core."""
    lines = [", ".join(sorted(r)) if r else "(empty)" for r in rs.reducts]
    core = ", ".join(sorted(rs.core)) if rs.core else "(none)"
    lines.append(f"CORE: {core}")
    return "\n".join(lines) + "\n"
