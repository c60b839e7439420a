"""Rewriting calculus for rational curve counts with tangency constraints.

A term is a product of point constraints; each point carries a group of
branch orders (order m = contact of order m+1 with a local divisor, m = 0 a
transverse point).  The pushing-points relation moves a singleton constraint
onto another point:

    <(T^m q),(m_1,...,m_b), rest> =
        <(m, m_1,...,m_b), rest> + sum_i <(..., m_i + m + 1, ...), rest>

Each output term keeps the total constraint codimension of the input (2+2m
per order on a two-complex-dimensional target; 2m on the projective line).
Solving for the group with a maximal order yields a rewrite that strictly
decreases (total order sum, number of positive orders) lexicographically,
so repeated application lands in order-zero (multipoint/multibranch) terms,
which a base table of blow-up-type invariants evaluates.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional, Sequence, Union

from .novikov import parse_rational

SURFACES = ("CP2", "CP1xCP1", "CP1")

Group = tuple  # sorted tuple of branch orders, descending
Key = tuple  # (surface | None, class | None, groups)
Combination = dict  # Key -> Fraction

# The comparable gravitational-descendant count: 4! * <psi^4 p> on conics
# equals 3, which differs from the tangency count <T^4 p> = 1; kept as a
# named constant so the regression suite can assert the two are not equal.
PSI4_CONIC_DESCENDANT_TIMES_24 = Fraction(3)


def canonical_groups(groups: Sequence[Sequence[int]]) -> tuple:
    out = []
    for g in groups:
        if len(g) == 0:
            raise ValueError("constraint groups must be nonempty")
        if any(int(m) < 0 for m in g):
            raise ValueError("branch orders must be >= 0")
        out.append(tuple(sorted((int(m) for m in g), reverse=True)))
    return tuple(sorted(out, reverse=True))


def make_key(
    groups: Sequence[Sequence[int]],
    surface: Optional[str] = None,
    cls=None,
) -> Key:
    if surface is not None:
        if surface not in SURFACES:
            raise ValueError(f"unknown surface {surface!r}")
        if surface == "CP1xCP1":
            if not isinstance(cls, (tuple, list)) or len(cls) != 2:
                raise ValueError("CP1xCP1 classes are bidegree pairs (d1, d2)")
            cls = (int(cls[0]), int(cls[1]))
            if min(cls) < 0:
                raise ValueError("bidegree components must be >= 0")
        else:
            cls = int(cls)
            if cls < 1:
                raise ValueError("degree must be >= 1")
    elif cls is not None:
        raise ValueError("a class needs a surface")
    return (surface, cls, canonical_groups(groups))


def make_term(groups, surface=None, cls=None, coeff=1) -> Combination:
    return {make_key(groups, surface, cls): Fraction(coeff)}


def codimension(key: Key) -> int:
    """Total constraint codimension; per order, 2+2m except 2m on CP1."""
    surface, _, groups = key
    per_point = 0 if surface == "CP1" else 2
    return sum(per_point + 2 * m for g in groups for m in g)


def index_dimension(surface: str, cls) -> int:
    if surface == "CP2":
        return 6 * cls - 2
    if surface == "CP1xCP1":
        return 4 * (cls[0] + cls[1]) - 2
    if surface == "CP1":
        return 4 * cls - 4
    raise ValueError(f"unknown surface {surface!r}")


def is_rigid(key: Key) -> bool:
    surface, cls, _ = key
    if surface is None:
        raise ValueError("rigidity needs a surface and class")
    return codimension(key) == index_dimension(surface, cls)


def _add(acc: Combination, key: Key, coeff: Fraction) -> None:
    total = acc.get(key, Fraction(0)) + coeff
    if total:
        acc[key] = total
    else:
        acc.pop(key, None)


# ---------------------------------------------------------------------------
# the rewrite


def push_point(
    key: Key, source: int, target: Optional[int]
) -> list[tuple[Key, Fraction]]:
    """Push the singleton constraint group ``source`` onto group ``target``.

    ``target=None`` is the trivial relabel onto a fresh point (no change).
    Returns the 1 + b output terms, each with unit coefficient multiplier.
    """
    surface, cls, groups = key
    if not 0 <= source < len(groups):
        raise ValueError(f"source group index {source} out of range")
    if len(groups[source]) != 1:
        raise ValueError("source group must be a singleton constraint")
    if target is None:
        return [(key, Fraction(1))]
    if not 0 <= target < len(groups) or target == source:
        raise ValueError("target must be a distinct group index")
    m = groups[source][0]
    rest = [g for i, g in enumerate(groups) if i not in (source, target)]
    tgt = groups[target]
    out: list[tuple[Key, Fraction]] = []
    joined = rest + [tuple(sorted(tgt + (m,), reverse=True))]
    out.append(((surface, cls, canonical_groups(joined)), Fraction(1)))
    for i in range(len(tgt)):
        merged = list(tgt)
        merged[i] = tgt[i] + m + 1
        out.append(
            (
                (surface, cls, canonical_groups(rest + [tuple(merged)])),
                Fraction(1),
            )
        )
    return out


def _expand_group(
    key: Key, group_idx: int, order: int
) -> list[tuple[Key, Fraction]]:
    """Solve the pushing relation for the group containing a positive order.

    Writing the chosen group as {M} ∪ R and pushing T^{M-1} onto R ∪ {0},
    every zero of R ∪ {0} merges back to the original group; with z zeros in
    R this gives

      (1+z)·<{M}∪R, rest> = <(M-1),(R∪{0}), rest> - <{M-1}∪R∪{0}, rest>
                            - Σ_{r∈R, r>0} <(R\\r)∪{0, r+M}, rest>
    """
    surface, cls, groups = key
    grp = groups[group_idx]
    M = order
    r_rest = list(grp)
    r_rest.remove(M)
    rest = [g for i, g in enumerate(groups) if i != group_idx]
    z = r_rest.count(0)
    scale = Fraction(1, 1 + z)
    out: list[tuple[Key, Fraction]] = []
    split = rest + [(M - 1,), tuple(r_rest + [0])]
    out.append(((surface, cls, canonical_groups(split)), scale))
    merged_back = rest + [tuple(r_rest + [M - 1, 0])]
    out.append(((surface, cls, canonical_groups(merged_back)), -scale))
    seen = set()
    for r in r_rest:
        if r <= 0 or r in seen:
            continue
        seen.add(r)
        mult = r_rest.count(r)
        swapped = list(r_rest)
        swapped.remove(r)
        term = rest + [tuple(swapped + [0, r + M])]
        out.append(
            ((surface, cls, canonical_groups(term)), -scale * mult)
        )
    return out


def _positive_slots(key: Key) -> list[tuple[int, int]]:
    _, _, groups = key
    return [
        (gi, m) for gi, g in enumerate(groups) for m in sorted(set(g)) if m > 0
    ]


def reduce_combination(
    expr: Combination,
    rng: Optional[random.Random] = None,
    trace: Optional[list] = None,
) -> Combination:
    """Rewrite until every term has all orders zero.

    Terms carrying a surface must be rigid (codimension equal to the index
    dimension of the class) and intermediate terms violating rigidity are
    dropped; without a surface the rewrite is purely formal and keeps
    everything.  ``rng`` randomizes which group/order is expanded first;
    any choice is admissible, and fixtures assert the result is invariant.
    A ``trace`` list, when given, collects (term, expansion) pairs, one per
    rewrite step.
    """
    for key in expr:
        surface = key[0]
        if surface is not None and not is_rigid(key):
            raise ValueError(
                f"non-rigid input term: codimension {codimension(key)} != "
                f"index dimension {index_dimension(surface, key[1])}"
            )
    memo: dict[Key, Combination] = {}

    def reduce_key(key: Key) -> Combination:
        cached = memo.get(key)
        if cached is not None:
            return cached
        surface = key[0]
        if surface is not None and not is_rigid(key):
            memo[key] = {}
            return {}
        slots = _positive_slots(key)
        if not slots:
            memo[key] = {key: Fraction(1)}
            return memo[key]
        gi, m = rng.choice(slots) if rng is not None else slots[-1]
        expansion = _expand_group(key, gi, m)
        if trace is not None:
            trace.append((key, list(expansion)))
        acc: Combination = {}
        for sub, c in expansion:
            for base, d in reduce_key(sub).items():
                _add(acc, base, c * d)
        memo[key] = acc
        return acc

    result: Combination = {}
    for key, coeff in expr.items():
        for base, d in reduce_key(key).items():
            _add(result, base, coeff * d)
    return result


# ---------------------------------------------------------------------------
# evaluation against a base table


class BaseInvariantTable:
    """Order-zero invariants keyed by (surface, class, sorted group sizes)."""

    def __init__(self, entries: dict, provenance: Optional[dict] = None):
        self.entries = dict(entries)
        self.provenance = dict(provenance or {})

    @staticmethod
    def table_key(key: Key) -> tuple:
        surface, cls, groups = key
        sizes = tuple(sorted((len(g) for g in groups), reverse=True))
        return (surface, cls, sizes)

    def lookup(self, key: Key) -> Optional[Fraction]:
        return self.entries.get(self.table_key(key))


def evaluate(expr: Combination, table: BaseInvariantTable) -> Fraction:
    missing = []
    total = Fraction(0)
    for key, coeff in expr.items():
        _, _, groups = key
        if any(m > 0 for g in groups for m in g):
            raise ValueError("evaluate expects a fully reduced combination")
        value = table.lookup(key)
        if value is None:
            missing.append(BaseInvariantTable.table_key(key))
        else:
            total += coeff * value
    if missing:
        listed = "; ".join(_format_table_key(k) for k in sorted(missing, key=repr))
        raise KeyError(
            f"base table is missing {len(missing)} entries: {listed}"
        )
    return total


def _format_table_key(tkey: tuple) -> str:
    surface, cls, sizes = tkey
    cls_text = ",".join(map(str, cls)) if isinstance(cls, tuple) else str(cls)
    return f"{surface} d={cls_text} sizes={','.join(map(str, sizes))}"


def load_table(path) -> BaseInvariantTable:
    """One record per line: surface | class | group sizes | value | provenance."""
    entries: dict = {}
    provenance: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split("|")]
            if len(fields) != 5:
                raise ValueError(f"malformed table line: {raw!r}")
            surface, cls_text, sizes_text, value_text, source = fields
            if surface not in SURFACES:
                raise ValueError(f"unknown surface in table: {surface!r}")
            if surface == "CP1xCP1":
                d1, d2 = (int(x) for x in cls_text.split(","))
                cls: Union[int, tuple] = (d1, d2)
            else:
                cls = int(cls_text)
            sizes = tuple(
                sorted((int(s) for s in sizes_text.split(",")), reverse=True)
            )
            tkey = (surface, cls, sizes)
            if tkey in entries:
                raise ValueError(f"duplicate table entry {tkey}")
            entries[tkey] = parse_rational(value_text)
            provenance[tkey] = source
    return BaseInvariantTable(entries, provenance)


# ---------------------------------------------------------------------------
# the bracketed constraint syntax


def format_key(key: Key) -> str:
    surface, cls, groups = key
    body = ",".join(
        "(" + ",".join("p" if m == 0 else f"T^{m} p" for m in g) + ")"
        for g in groups
    )
    if surface is None:
        return f"<{body}>"
    cls_text = ",".join(map(str, cls)) if isinstance(cls, tuple) else str(cls)
    return f"{surface} d={cls_text} <{body}>"


def format_combination(expr: Combination) -> str:
    if not expr:
        return "0"
    parts = []
    for key in sorted(expr, key=repr):
        parts.append(f"{expr[key]} * {format_key(key)}")
    return "  +  ".join(parts)


def parse_constraint_expression(text: str) -> Combination:
    """`[SURFACE d=N[,N]] <(T^m p),(p,p),...>`; bare p or q is order zero."""
    text = text.strip()
    surface = None
    cls = None
    if not text.startswith("<"):
        head, _, rest = text.partition("<")
        rest = "<" + rest
        parts = head.split()
        if len(parts) != 2 or not parts[1].startswith("d="):
            raise ValueError(
                "expected '<SURFACE> d=<class> <groups>' before the bracket"
            )
        surface = parts[0]
        cls_text = parts[1][2:]
        if "," in cls_text:
            cls = tuple(int(x) for x in cls_text.split(","))
        else:
            cls = int(cls_text)
        text = rest.strip()
    if not (text.startswith("<") and text.endswith(">")):
        raise ValueError("constraint expression must be bracketed: <...>")
    inner = text[1:-1].strip()
    groups = []
    depth = 0
    cur = []
    for ch in inner:
        if ch == "(":
            depth += 1
            if depth == 1:
                cur = []
                continue
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {text!r}")
            if depth == 0:
                groups.append(_parse_group("".join(cur)))
                continue
        if depth >= 1:
            cur.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced parentheses in {text!r}")
    if not groups:
        raise ValueError("no constraint groups found")
    return make_term(groups, surface, cls)


def _parse_group(text: str) -> list[int]:
    orders = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if chunk in ("p", "q"):
            orders.append(0)
            continue
        if chunk.startswith("T^"):
            body = chunk[2:].strip()
            for label in ("p", "q"):
                if body.endswith(label):
                    body = body[: -len(label)].strip()
                    break
            orders.append(int(body))
            continue
        raise ValueError(f"cannot parse constraint {chunk!r}")
    if not orders:
        raise ValueError("empty constraint group")
    return orders
