"""Capacity evaluators: closed forms, spectral enumeration, the finite-model
word solver, ECH embedding ratios, and ball-packing bounds.

Distinguished non-numeric results are first-class string sentinels rather
than exceptions: closed forms outside their proven range return
``NO_FORMULA``, and searches that exhaust their cutoff say so explicitly
instead of claiming nonexistence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .linfty import (
    LInfinityModel,
    ModelError,
    augmentation_hat,
    extend_coderivation,
)
from .linsolve import solve_linear_system
from .spectra import OrbitRecord, OrbitSpectrum

NO_FORMULA = "no-formula"
NOT_FOUND = "not-found-below-cutoff"
INFINITE = "infinite"
NO_OBSTRUCTION = "no-obstruction-below-K"

Value = Union[Fraction, str]


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainDescriptor:
    kind: str  # "ball" | "ellipsoid" | "polydisk"
    params: tuple

    def __post_init__(self):
        if self.kind not in ("ball", "ellipsoid", "polydisk"):
            raise ValueError(f"unsupported domain kind {self.kind!r}")
        params = tuple(Fraction(p) for p in self.params)
        if not params or any(p <= 0 for p in params):
            raise ValueError("domain parameters must be positive")
        if list(params) != sorted(params):
            raise ValueError("domain parameters must be sorted")
        object.__setattr__(self, "params", params)

    @staticmethod
    def ball(a=1) -> "DomainDescriptor":
        return DomainDescriptor("ball", (a,))

    @staticmethod
    def ellipsoid(a, b) -> "DomainDescriptor":
        return DomainDescriptor("ellipsoid", (a, b))

    @staticmethod
    def polydisk(a, b) -> "DomainDescriptor":
        return DomainDescriptor("polydisk", (a, b))

    def __str__(self):
        inner = ",".join(str(p) for p in self.params)
        return {"ball": "B4", "ellipsoid": "E", "polydisk": "P"}[self.kind] + f"({inner})"


# ---------------------------------------------------------------------------
# closed forms


def g_tangency(domain: DomainDescriptor, k: int) -> Value:
    """The capacity with one point constraint of contact order k.

    Values are proven only on specific index ranges; anything outside
    returns NO_FORMULA rather than extrapolating.  Capacities scale like
    area, so parameters enter linearly.
    """
    if k < 1:
        raise ValueError("index must be >= 1")
    if domain.kind == "ball":
        (c,) = domain.params
        if k % 3 != 2:
            return NO_FORMULA
        return c * Fraction(math.ceil(Fraction(k + 1, 3)))
    if domain.kind == "ellipsoid":
        a, b = domain.params
        x = b / a
        if k > x:
            return NO_FORMULA
        return a * k
    a, b = domain.params
    x = b / a
    if k % 2 == 0:
        return NO_FORMULA
    return a * min(Fraction(k), x + Fraction(k - 1, 2))


def r_points_ball(r: int) -> Fraction:
    """Minimal energy to pass through r generic points in the unit four-ball."""
    if r < 1:
        raise ValueError("need r >= 1")
    return Fraction(math.ceil(Fraction(r + 1, 3)))


# ---------------------------------------------------------------------------
# spectral enumeration


def one_positive_end(ends: Sequence[OrbitRecord]) -> bool:
    """Admissibility rule for irrational-ellipsoid tangency bounds: curves
    with two or more positive ends are excluded by the relative adjunction
    formula and writhe estimates, so only single-end asymptotics count."""
    return len(ends) == 1


def polydisk_slice_rule(ends: Sequence[OrbitRecord]) -> bool:
    """Admissibility rule for perturbed-polydisk tangency bounds: a curve
    whose positive ends all lie on the short-factor orbit row (beta_{i,0})
    is a Hurwitz cover of the two-dimensional slice, which pins its energy;
    only the single-end member of that family is a rigid competitor.
    Mixed asymptotics are left to the index count."""
    short_row = [
        e for e in ends if e.label.startswith("beta_") and e.multiplicity[1] == 0
    ]
    if len(short_row) == len(ends):
        return len(ends) == 1
    return True


def spectral_lower_bound(
    spectrum: OrbitSpectrum,
    constraint_codim: int,
    action_cutoff,
    max_ends: Optional[int] = None,
    admissible: Optional[Callable[[Sequence[OrbitRecord]], bool]] = None,
) -> Value:
    """Minimum total action over multisets of positive ends with Fredholm
    index zero for the given constraint, searched up to the action cutoff.

    ``admissible`` injects geometric exclusions beyond the index formula
    (see one_positive_end and polydisk_slice_rule); by default every
    index-zero multiset competes.  Returns INFINITE when no configuration
    exists below the cutoff.
    """
    if constraint_codim < 0 or constraint_codim % 2:
        raise ValueError("constraint codimension must be even and >= 0")
    cutoff = Fraction(action_cutoff)
    orbits = [o for o in spectrum.orbits if o.action <= cutoff]
    if not orbits:
        raise ValueError(
            f"action cutoff {cutoff} lies below the smallest orbit action; "
            "nothing can be certified"
        )
    orbits.sort(key=lambda o: o.action)
    target = constraint_codim + 2  # index zero reads sum(CZ_i + 1) = codim + 2
    min_cz = min(o.cz for o in orbits)
    min_action = min(o.action for o in orbits)
    derived = int(cutoff / min_action)
    if min_cz + 1 > 0:
        derived = min(derived, target // (min_cz + 1))
    ends_cap = derived if max_ends is None else min(max_ends, derived)

    best: Optional[Fraction] = None
    chosen: list[OrbitRecord] = []

    def dfs(start: int, cost: int, action: Fraction) -> None:
        nonlocal best
        if cost == target and chosen:
            if (admissible is None or admissible(chosen)) and (
                best is None or action < best
            ):
                best = action
            return
        if len(chosen) >= ends_cap:
            return
        for i in range(start, len(orbits)):
            o = orbits[i]
            new_cost = cost + o.cz + 1
            new_action = action + o.action
            if new_cost > target or new_action > cutoff:
                continue
            if best is not None and new_action >= best:
                continue
            chosen.append(o)
            dfs(i, new_cost, new_action)
            chosen.pop()

    dfs(0, 0, Fraction(0))
    return INFINITE if best is None else best


# ---------------------------------------------------------------------------
# finite-model word solver


def gb_solver(
    model: LInfinityModel,
    b: Sequence[int],
    word_cap: int,
    action_cutoff,
    augmentation: Optional[str] = None,
) -> Value:
    """Minimum action level A at which some closed bar element x of word
    length <= word_cap and action <= A hits the t-power word ``b`` under
    the augmentation.  Scalars are exact rationals with T evaluated at 1;
    the reported level recovers the Novikov exponent (increasing-filtration
    formulation for Liouville domains).
    """
    if model.algebra_mode != "module":
        raise ModelError("gb_solver expects a module-mode model")
    if not model.filtered:
        raise ModelError("gb_solver expects a filtered model")
    if word_cap < 1:
        raise ModelError("word cap must be >= 1")
    target = tuple(sorted(int(p) for p in b))
    if not target or any(p < 0 for p in target):
        raise ModelError("b must be a nonempty word of nonnegative t-powers")
    if augmentation is None:
        if len(model.augmentations) != 1:
            raise ModelError(
                "model has several augmentations; pass the name explicitly"
            )
        aug = next(iter(model.augmentations.values()))
    else:
        try:
            aug = model.augmentations[augmentation]
        except KeyError:
            raise ModelError(f"no augmentation named {augmentation!r}") from None

    cutoff = Fraction(action_cutoff)
    words = model.basis_words(word_cap, cutoff)
    if not words:
        return NOT_FOUND
    diff_cols = []
    aug_cols = []
    for w in words:
        diff_cols.append(
            {u: c.at_one() for u, c in extend_coderivation(model, w).items() if c.at_one()}
        )
        aug_cols.append(
            {t: c.at_one() for t, c in augmentation_hat(aug, w).items() if c.at_one()}
        )

    levels = sorted({w.action for w in words})
    for level in levels:
        idx = [i for i, w in enumerate(words) if w.action <= level]
        rows: dict = {}
        for pos, i in enumerate(idx):
            for u, c in diff_cols[i].items():
                rows.setdefault(("d", u), {})[pos] = c
            for t, c in aug_cols[i].items():
                rows.setdefault(("a", t), {})[pos] = c
        if ("a", target) not in rows:
            continue
        row_keys = sorted(rows, key=repr)
        matrix = [
            [rows[r].get(pos, Fraction(0)) for pos in range(len(idx))]
            for r in row_keys
        ]
        rhs = [
            Fraction(1) if r == ("a", target) else Fraction(0) for r in row_keys
        ]
        if solve_linear_system(matrix, rhs) is not None:
            return level
    return NOT_FOUND


# ---------------------------------------------------------------------------
# McDuff's embedding function via ECH ratios


def ech_sequence(a, b, K: int) -> list[Fraction]:
    """c_0..c_K of E(a,b) in one pass (histogram of lattice values)."""
    a = Fraction(a)
    b = Fraction(b)
    if a <= 0 or b <= 0:
        raise ValueError("ellipsoid parameters must be positive")
    if K < 0:
        raise ValueError("K must be >= 0")
    scale = Fraction(math.lcm(a.denominator, b.denominator))
    a_int, b_int = int(a * scale), int(b * scale)
    hi = max(a_int, b_int)
    while _lattice_count(a_int, b_int, hi) < K + 1:
        hi *= 2
    hist = [0] * (hi + 1)
    for i in range(hi // a_int + 1):
        base = i * a_int
        for j in range((hi - base) // b_int + 1):
            hist[base + j * b_int] += 1
    out: list[Fraction] = []
    for v, count in enumerate(hist):
        out.extend([Fraction(v) / scale] * count)
        if len(out) > K:
            break
    return out[: K + 1]


def _lattice_count(a_int: int, b_int: int, bound: int) -> int:
    total = 0
    for i in range(bound // a_int + 1):
        total += (bound - i * a_int) // b_int + 1
    return total


def mcduff_f(x, K: int) -> Fraction:
    """Certified lower bound for the ellipsoid-into-ball function:
    the exact maximum of c_k(E(1,x))/c_k(B(1)) over k = 1..K."""
    x = Fraction(x)
    if x < 1:
        raise ValueError("need x >= 1")
    if K < 1:
        raise ValueError("need K >= 1")
    num = ech_sequence(1, x, K)
    den = ech_sequence(1, 1, K)
    best = Fraction(0)
    for k in range(1, K + 1):
        ratio = num[k] / den[k]
        if ratio > best:
            best = ratio
    return best


def obstruct_4d_ellipsoid(a, b, c, d, K: int) -> Union[int, str]:
    """First k <= K with c_k(E(a,b)) > c_k(E(c,d)), else the explicit
    no-obstruction verdict (which is not an embedding certificate)."""
    if K < 1:
        raise ValueError("need K >= 1")
    src = ech_sequence(a, b, K)
    tgt = ech_sequence(c, d, K)
    for k in range(1, K + 1):
        if src[k] > tgt[k]:
            return k
    return NO_OBSTRUCTION


# ---------------------------------------------------------------------------
# weight expansions and packing bounds


def weight_decomposition(p: int, q: int) -> list[Fraction]:
    """Weight expansion of p/q >= 1: repeated subtraction normalized by q,
    returned in the order the subtraction produces (nonincreasing)."""
    if p < 1 or q < 1 or p < q:
        raise ValueError("need integers p >= q >= 1")
    if math.gcd(p, q) != 1:
        raise ValueError("need gcd(p,q) = 1")
    weights = []
    hi, lo = p, q
    while lo > 0:
        count, rem = divmod(hi, lo)
        weights.extend([Fraction(lo, q)] * count)
        hi, lo = lo, rem
    return weights


def packing_lower_bounds(weights: Sequence[Fraction], query: tuple) -> Fraction:
    """Ball-packing lower bounds from a weight multiset.

    query is ('g_tangency', k), ('r_points', r), or ('r_multipoint', k).
    The r_points bound maximizes sum of a_i * ceil((j_i+1)/3) over all ways
    of distributing r points among the balls, by dynamic programming.
    """
    weights = [Fraction(w) for w in weights]
    if not weights:
        raise ValueError("empty weight multiset")
    if any(weights[i] < weights[i + 1] for i in range(len(weights) - 1)):
        raise ValueError("weights must be sorted nonincreasing")
    kind, index = query
    if index < 1:
        raise ValueError("query index must be >= 1")
    a1 = weights[0]
    if kind == "g_tangency":
        return a1 * math.ceil(Fraction(index + 1, 3))
    if kind == "r_multipoint":
        return index * a1
    if kind != "r_points":
        raise ValueError(f"unknown packing query {kind!r}")
    best = [Fraction(0)] + [None] * index  # best[j] over balls so far
    for a in weights:
        for j in range(index, 0, -1):
            for used in range(1, j + 1):
                if best[j - used] is None:
                    continue
                cand = best[j - used] + a * math.ceil(Fraction(used + 1, 3))
                if best[j] is None or cand > best[j]:
                    best[j] = cand
    assert best[index] is not None
    return best[index]


# ---------------------------------------------------------------------------
# stabilized obstructions


def _unit_target(target_family: str) -> DomainDescriptor:
    if target_family == "ball":
        return DomainDescriptor.ball(1)
    if target_family == "polydisk":
        return DomainDescriptor.polydisk(1, 1)
    raise ValueError("target family must be 'ball' or 'polydisk'")


def stabilized_obstruction(
    source: DomainDescriptor, target_family: str
) -> tuple[Fraction, int]:
    """Largest ratio g(source,k)/g(unit target,k) over indices where both
    closed forms are proven; returns (bound, witness k).

    The ratio is eventually nonincreasing once the source formula switches
    to its capped branch, so scanning k up to 6*ceil(x)+6 (x the aspect
    ratio of the source) is exhaustive.
    """
    target = _unit_target(target_family)
    if source.kind == "ball":
        x = Fraction(1)
    else:
        a, b = source.params
        x = b / a
    best: Optional[Fraction] = None
    witness = 0
    for k in range(1, 6 * math.ceil(x) + 7):
        num = g_tangency(source, k)
        den = g_tangency(target, k)
        if num == NO_FORMULA or den == NO_FORMULA:
            continue
        ratio = num / den
        if best is None or ratio > best:
            best, witness = ratio, k
    if best is None:
        raise ValueError(
            f"no index admits closed forms for both {source} and the unit "
            f"{target_family}"
        )
    return best, witness
