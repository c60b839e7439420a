"""Filtered L-infinity models: coderivations, morphisms, Maurer-Cartan theory.

A model stores the operations ``l^k`` sparsely on canonical generator words.
In ``module`` mode outputs are single generators (``l^k: ⊙^k V -> V``); in
``cdga`` mode outputs are monomials (words of generators, possibly empty) and
operations are extended to monomial inputs by the Leibniz rule in each slot.

Bar-complex elements are linear combinations of :class:`~symcap.words.Word`
objects with :class:`~symcap.novikov.NovikovPolynomial` coefficients.  In
module mode bar letters are generators; in cdga mode bar letters are
monomials, i.e. the bar words are words of words.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .novikov import NovikovPolynomial, fmt_rational
from .words import (
    Generator,
    Word,
    crossing_sign,
    normalize_word,
    reorder_sign,
)

Combo = dict  # Word -> NovikovPolynomial


class ModelError(ValueError):
    """Malformed model, morphism, or element data."""


class IntegrityError(RuntimeError):
    """A verified postcondition failed on given data."""


# ---------------------------------------------------------------------------
# linear-combination helpers


def combo_add_into(acc: Combo, word: Word, coeff: NovikovPolynomial) -> None:
    if coeff.is_zero():
        return
    prev = acc.get(word)
    total = coeff if prev is None else prev + coeff
    if total.is_zero():
        acc.pop(word, None)
    else:
        acc[word] = total


def combo_scale(combo: Combo, coeff: NovikovPolynomial) -> Combo:
    out: Combo = {}
    for w, c in combo.items():
        combo_add_into(out, w, c * coeff)
    return out


def combo_sub(a: Combo, b: Combo) -> Combo:
    out = dict(a)
    for w, c in b.items():
        combo_add_into(out, w, -c)
    return out


def combo_valuation(combo: Combo):
    """Filtration level: min over terms of valuation(coeff) + action(word)."""
    if not combo:
        return math.inf
    return min(c.valuation() + w.action for w, c in combo.items())


def _sign_nov(sign: int, cutoff) -> NovikovPolynomial:
    return NovikovPolynomial(((0, sign),), cutoff)


def set_partitions(items: Sequence) -> Iterable[list[list]]:
    """All partitions of ``items`` into unordered nonempty blocks.

    Blocks preserve the input order internally; with sorted input, every
    block is ascending and blocks can be canonically ordered by first entry.
    """
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + [list(b) for b in part]
        for i in range(len(part)):
            yield (
                [list(b) for b in part[:i]]
                + [[first] + list(part[i])]
                + [list(b) for b in part[i + 1 :]]
            )


# ---------------------------------------------------------------------------
# augmentations


class Augmentation:
    """Components of an L-infinity map to the t-power module Λ≥0[t].

    ``components`` maps canonical input words (of generators) to t-polynomials
    represented as ``{t_power: NovikovPolynomial}``.  Scalar-valued (CDGA)
    augmentations use only ``t^0``.
    """

    def __init__(self, name: str, components: dict):
        self.name = name
        comps: dict[Word, dict[int, NovikovPolynomial]] = {}
        for word, tpoly in components.items():
            clean = {int(m): c for m, c in tpoly.items() if not c.is_zero()}
            if any(m < 0 for m in clean):
                raise ModelError(f"augmentation {name}: negative t-power")
            if clean:
                comps[word] = clean
        self.components = comps

    def component(self, word: Word) -> dict[int, NovikovPolynomial]:
        return self.components.get(word, {})

    def max_arity(self) -> int:
        return max((len(w) for w in self.components), default=0)

    def scalar_on_generator(self, g: Generator) -> NovikovPolynomial:
        """The t^0 value on a single generator; errors on higher t-powers."""
        tpoly = self.component(Word([g]))
        if any(m != 0 for m in tpoly):
            raise ModelError(
                f"augmentation {self.name} is not scalar-valued on {g.name}"
            )
        return tpoly.get(0, NovikovPolynomial.zero())


# ---------------------------------------------------------------------------
# the model


class LInfinityModel:
    def __init__(
        self,
        generators: Sequence[Generator],
        operations: dict,
        grading_mode: str = "Z",
        algebra_mode: str = "module",
        cutoff=None,
        filtered: bool = False,
        augmentations: Optional[dict[str, Augmentation]] = None,
    ):
        if grading_mode not in ("Z", "Z2"):
            raise ModelError(f"unknown grading_mode {grading_mode!r}")
        if algebra_mode not in ("module", "cdga"):
            raise ModelError(f"unknown algebra_mode {algebra_mode!r}")
        self.grading_mode = grading_mode
        self.algebra_mode = algebra_mode
        self.cutoff = None if cutoff is None else Fraction(cutoff)
        self.filtered = bool(filtered)

        self.generators: dict[str, Generator] = {}
        for g in generators:
            if g.name in self.generators:
                raise ModelError(f"duplicate generator {g.name}")
            self.generators[g.name] = g
        self.ordered_generators = sorted(
            self.generators.values(), key=lambda g: g.sort_key
        )

        self.operations: dict[tuple[int, Word], Combo] = {}
        for (arity, word), combo in operations.items():
            self._check_key(arity, word)
            clean: Combo = {}
            for out, coeff in combo.items():
                self._check_output_word(out)
                coeff = coeff.truncate(self.cutoff) if self.cutoff else coeff
                if coeff.is_zero():
                    continue
                self._check_degree_step(word, out, arity)
                if self.filtered:
                    lvl = coeff.valuation() + out.action
                    if lvl < word.action:
                        raise ModelError(
                            f"operation on {self._word_str(word)} violates the "
                            f"filtration: output {self._word_str(out)} at level "
                            f"{fmt_rational(lvl)} < {fmt_rational(word.action)}"
                        )
                combo_add_into(clean, out, coeff)
            if clean:
                self.operations[(arity, word)] = clean

        self.augmentations: dict[str, Augmentation] = {}
        for name, aug in (augmentations or {}).items():
            for word, tpoly in aug.components.items():
                self._check_key(len(word), word)
                if self.filtered:
                    for _, coeff in tpoly.items():
                        if coeff.valuation() < word.action:
                            raise ModelError(
                                f"augmentation {name} on {self._word_str(word)} "
                                "violates the filtration"
                            )
            self.augmentations[name] = aug

    # -- validation helpers ------------------------------------------------

    def _word_str(self, w: Word) -> str:
        if self.algebra_mode == "cdga" and w.letters and isinstance(w.letters[0], Word):
            return " , ".join(self._mono_str(m) for m in w.letters)
        return self._mono_str(w)

    @staticmethod
    def _mono_str(w: Word) -> str:
        if not w.letters:
            return "1"
        return "*".join(l.name for l in w.letters)

    def _check_key(self, arity: int, word: Word) -> None:
        if arity != len(word):
            raise ModelError(f"arity {arity} does not match word length {len(word)}")
        if arity < 1:
            raise ModelError("operations need arity >= 1")
        for l in word.letters:
            if not isinstance(l, Generator) or self.generators.get(l.name) != l:
                raise ModelError(f"unknown generator in key {self._word_str(word)}")
        sign, canon = normalize_word(word.letters)
        if canon != word or sign != 1:
            raise ModelError(f"non-canonical key word {self._word_str(word)}")

    def _check_output_word(self, w: Word) -> None:
        if self.algebra_mode == "module":
            if len(w) != 1:
                raise ModelError("module-mode outputs must be single generators")
        for l in w.letters:
            if not isinstance(l, Generator) or self.generators.get(l.name) != l:
                raise ModelError(f"unknown generator in output {self._mono_str(w)}")

    def deg_equal(self, a: int, b: int) -> bool:
        return (a - b) % 2 == 0 if self.grading_mode == "Z2" else a == b

    def _check_degree_step(self, key: Word, out: Word, arity: int) -> None:
        if not self.deg_equal(out.degree, key.degree + 1):
            raise ModelError(
                f"operation on {self._word_str(key)} is not degree +1 "
                f"(output {self._mono_str(out)})"
            )

    # -- basic element builders ---------------------------------------------

    def gen(self, name: str) -> Generator:
        try:
            return self.generators[name]
        except KeyError:
            raise ModelError(f"unknown generator {name!r}") from None

    def word(self, *names: str) -> Word:
        """Canonical word of generators (module bar word / cdga monomial)."""
        sign, w = normalize_word([self.gen(n) for n in names])
        if w is None or sign != 1:
            raise ModelError(f"word {names} is zero or non-canonical")
        return w

    def bar_letter(self, g: Generator):
        return Word([g]) if self.algebra_mode == "cdga" else g

    def nov(self, terms) -> NovikovPolynomial:
        return NovikovPolynomial(terms, self.cutoff)

    def one(self) -> NovikovPolynomial:
        return NovikovPolynomial.unit(self.cutoff)

    def basis_words(self, max_len: int, max_action=None) -> list[Word]:
        """Canonical bar words up to the given length (and action bound)."""
        cap = self.cutoff if max_action is None else Fraction(max_action)
        letters = (
            [Word([g]) for g in self.ordered_generators]
            if self.algebra_mode == "cdga"
            else list(self.ordered_generators)
        )
        if self.algebra_mode == "cdga":
            monos: list[Word] = []
            for size in range(1, max_len + 1):
                monos.extend(
                    m
                    for m in self._multisets(self.ordered_generators, size, cap)
                    if m is not None
                )
            letters = sorted(monos, key=lambda w: w.sort_key)
            out: list[Word] = []
            for size in range(1, max_len + 1):
                for w in self._multisets(letters, size, cap):
                    if w is not None and sum(len(l) for l in w.letters) <= max_len:
                        out.append(w)
            return out
        out = []
        for size in range(1, max_len + 1):
            out.extend(w for w in self._multisets(letters, size, cap) if w is not None)
        return out

    @staticmethod
    def _multisets(letters: Sequence, size: int, cap) -> Iterable[Optional[Word]]:
        n = len(letters)

        def rec(start: int, left: int, acc: list, action: Fraction):
            if left == 0:
                sign, w = normalize_word(acc)
                yield w if sign == 1 else None
                return
            for i in range(start, n):
                l = letters[i]
                if l.degree % 2 and acc and acc[-1] == l:
                    continue
                a = action + l.action
                if cap is not None and a > cap:
                    continue
                acc.append(l)
                yield from rec(i, left - 1, acc, a)
                acc.pop()

        yield from rec(0, size, [], Fraction(0))

    # -- applying operations -------------------------------------------------

    def apply_operation(self, letters: Sequence) -> Combo:
        """Apply l^k to k bar letters (generators or, in cdga mode, monomials)."""
        k = len(letters)
        if self.algebra_mode == "module":
            sign, key = normalize_word(letters)
            if key is None:
                return {}
            combo = self.operations.get((k, key), {})
            return combo_scale(combo, _sign_nov(sign, self.cutoff)) if sign != 1 else dict(combo)
        return self._apply_cdga(k, letters)

    def _apply_cdga(self, k: int, monomials: Sequence[Word]) -> Combo:
        """Leibniz rule in each slot: pick one letter per monomial, feed l^k."""
        flat: list[Generator] = []
        slots: list[list[int]] = []
        for mono in monomials:
            idxs = []
            for l in mono.letters:
                idxs.append(len(flat))
                flat.append(l)
            slots.append(idxs)
        if any(not s for s in slots):
            return {}  # a unit slot is killed by the multiderivation
        degrees = [g.degree for g in flat]
        out: Combo = {}

        def rec(slot: int, chosen: list[int]):
            if slot == len(slots):
                self._leibniz_term(flat, degrees, chosen, out)
                return
            for idx in slots[slot]:
                chosen.append(idx)
                rec(slot + 1, chosen)
                chosen.pop()

        rec(0, [])
        return out

    def _leibniz_term(
        self,
        flat: list[Generator],
        degrees: list[int],
        chosen: list[int],
        out: Combo,
    ) -> None:
        leftovers = [i for i in range(len(flat)) if i not in chosen]
        order = list(chosen) + leftovers
        sign1 = reorder_sign(degrees, order)
        sign2, key = normalize_word([flat[i] for i in chosen])
        if key is None:
            return
        combo = self.operations.get((len(chosen), key))
        if not combo:
            return
        rest = [flat[i] for i in leftovers]
        for u, coeff in combo.items():
            letters = list(u.letters) + rest
            if letters:
                sign3, merged = normalize_word(letters)
                if merged is None:
                    continue
            else:
                sign3, merged = 1, Word(())
            total = coeff.scale(sign1 * sign2 * sign3)
            combo_add_into(out, merged, total)


# ---------------------------------------------------------------------------
# coderivation extension and relation checking


def extend_coderivation(model: LInfinityModel, w: Word) -> Combo:
    """The coderivation value l̂(w) as a combination of bar words."""
    if len(w) == 0:
        raise ModelError("the empty word is not part of the reduced bar complex")
    degrees = [l.degree for l in w.letters]
    out: Combo = {}
    positions = range(len(w))
    for size in range(1, len(w) + 1):
        for fed in combinations(positions, size):
            sign = crossing_sign(degrees, fed)
            value = model.apply_operation([w.letters[p] for p in fed])
            if not value:
                continue
            rest = [w.letters[p] for p in positions if p not in fed]
            for v, coeff in value.items():
                letter = v if model.algebra_mode == "cdga" else v.letters[0]
                sign2, bar = normalize_word([letter] + rest)
                if bar is None:
                    continue
                combo_add_into(out, bar, coeff.scale(sign * sign2))
    return out


def coderivation_on_combo(model: LInfinityModel, combo: Combo) -> Combo:
    out: Combo = {}
    for w, c in combo.items():
        for u, d in extend_coderivation(model, w).items():
            combo_add_into(out, u, c * d)
    return out


def check_linfty_relations(
    model: LInfinityModel, max_word_len: int
) -> list[tuple[Word, Combo]]:
    """l̂(l̂(w)) for every basis word up to the length bound; empty iff all vanish."""
    if max_word_len < 1:
        raise ModelError("max_word_len must be >= 1")
    violations = []
    for w in model.basis_words(max_word_len):
        residual = coderivation_on_combo(model, extend_coderivation(model, w))
        if residual:
            violations.append((w, residual))
    return violations


# ---------------------------------------------------------------------------
# morphisms


class LInfinityMorphism:
    """Maps Φ^k stored on canonical source words; degree 0, filtration-safe.

    In cdga mode only arity-1 components on generators are supported and the
    morphism is the induced algebra map (this covers the linearization maps
    F^ε, which are substitutions x -> x + ε(x)).
    """

    def __init__(
        self,
        source: LInfinityModel,
        target: LInfinityModel,
        components: dict,
        check_degree: bool = True,
    ):
        self.source = source
        self.target = target
        self.components: dict[tuple[int, Word], Combo] = {}
        algebra_map = source.algebra_mode == "cdga"
        for (arity, word), combo in components.items():
            source._check_key(arity, word)
            if algebra_map and arity != 1:
                raise ModelError(
                    "cdga-mode morphisms support only arity-1 components"
                )
            clean: Combo = {}
            for out, coeff in combo.items():
                target._check_output_word(out)
                if coeff.is_zero():
                    continue
                if check_degree and not source.deg_equal(out.degree, word.degree):
                    raise ModelError(
                        f"morphism component on {source._word_str(word)} "
                        "is not degree 0"
                    )
                if source.filtered and target.filtered:
                    if coeff.valuation() + out.action < word.action:
                        raise ModelError(
                            f"morphism component on {source._word_str(word)} "
                            "violates the filtration"
                        )
                combo_add_into(clean, out, coeff)
            if clean:
                self.components[(arity, word)] = clean

    def max_arity(self) -> int:
        return max((a for a, _ in self.components), default=0)

    def component(self, letters: Sequence) -> Combo:
        sign, key = normalize_word(letters)
        if key is None:
            return {}
        combo = self.components.get((len(key), key), {})
        if sign == 1:
            return dict(combo)
        return combo_scale(combo, _sign_nov(sign, self.target.cutoff))

    # -- application ---------------------------------------------------------

    def apply_to_monomial(self, mono: Word) -> Combo:
        """Multiplicative extension to a cdga monomial (algebra-map mode)."""
        result: Combo = {Word(()): NovikovPolynomial.unit(self.target.cutoff)}
        for g in mono.letters:
            image = self.component([g])
            merged: Combo = {}
            for w1, c1 in result.items():
                for w2, c2 in image.items():
                    letters = list(w1.letters) + list(w2.letters)
                    if letters:
                        sign, u = normalize_word(letters)
                        if u is None:
                            continue
                    else:
                        sign, u = 1, Word(())
                    combo_add_into(merged, u, (c1 * c2).scale(sign))
            result = merged
        return result


def extend_morphism(m: LInfinityMorphism, w: Word) -> Combo:
    """Φ̂(w): sum over set partitions of the letter positions of ``w``."""
    if len(w) == 0:
        raise ModelError("the empty word is not part of the reduced bar complex")
    if m.source.algebra_mode == "cdga":
        # algebra map: letterwise images, multiplied out at the bar level
        acc: Combo = {}
        parts = [m.apply_to_monomial(mono) for mono in w.letters]
        _tensor_into(acc, parts, m.target)
        return acc
    degrees = [l.degree for l in w.letters]
    out: Combo = {}
    for part in set_partitions(list(range(len(w)))):
        blocks = sorted(part, key=lambda b: b[0])
        order = [p for b in blocks for p in b]
        sign = reorder_sign(degrees, order)
        values = []
        for b in blocks:
            combo = m.components.get(
                (len(b), Word([w.letters[p] for p in b])), None
            )
            if not combo:
                values = None
                break
            values.append(combo)
        if values is None:
            continue
        partial: Combo = {}
        _tensor_into(partial, values, m.target)
        for u, c in partial.items():
            combo_add_into(out, u, c.scale(sign))
    return out


def _tensor_into(acc: Combo, factors: list[Combo], target: LInfinityModel) -> None:
    """⊙-product of per-block output combinations, normalized at bar level."""

    def rec(i: int, letters: list, coeff: NovikovPolynomial):
        if coeff.is_zero():
            return
        if i == len(factors):
            sign, bar = normalize_word(letters)
            if bar is not None:
                combo_add_into(acc, bar, coeff.scale(sign))
            return
        for wrd, c in factors[i].items():
            letter = wrd if target.algebra_mode == "cdga" else wrd.letters[0]
            rec(i + 1, letters + [letter], coeff * c)

    rec(0, [], NovikovPolynomial.unit(target.cutoff))


def morphism_on_combo(m: LInfinityMorphism, combo: Combo) -> Combo:
    out: Combo = {}
    for w, c in combo.items():
        for u, d in extend_morphism(m, w).items():
            combo_add_into(out, u, c * d)
    return out


def identity_morphism(model: LInfinityModel) -> LInfinityMorphism:
    comps = {}
    for g in model.ordered_generators:
        w = Word([g])
        comps[(1, w)] = {w: NovikovPolynomial.unit(model.cutoff)}
    return LInfinityMorphism(model, model, comps)


def compose_morphisms(
    psi: LInfinityMorphism,
    phi: LInfinityMorphism,
    max_word_len: Optional[int] = None,
) -> LInfinityMorphism:
    """Components of Ψ̂∘Φ̂, materialized up to the given word length."""
    if phi.target is not psi.source:
        raise ModelError("compose_morphisms: target(phi) must be source(psi)")
    if phi.source.algebra_mode == "cdga":
        comps = {}
        for g in phi.source.ordered_generators:
            w = Word([g])
            total: Combo = {}
            for u, c in phi.apply_to_monomial(w).items():
                for v, d in psi.apply_to_monomial(u).items():
                    combo_add_into(total, v, c * d)
            if total:
                comps[(1, w)] = total
        return LInfinityMorphism(phi.source, psi.target, comps)
    if max_word_len is None:
        max_word_len = max(1, phi.max_arity() * psi.max_arity())
    comps: dict[tuple[int, Word], Combo] = {}
    for w in phi.source.basis_words(max_word_len):
        image = extend_morphism(phi, w)
        total: Combo = {}
        for u, c in image.items():
            block = psi.components.get((len(u), u))
            if not block:
                continue
            for v, d in block.items():
                combo_add_into(total, v, c * d)
        if total:
            comps[(len(w), w)] = total
    return LInfinityMorphism(phi.source, psi.target, comps)


def check_morphism(
    m: LInfinityMorphism, max_word_len: int
) -> list[tuple[Word, Combo]]:
    """Violations of Φ̂∘l̂ = l̂'∘Φ̂ on basis words up to the length bound."""
    violations = []
    for w in m.source.basis_words(max_word_len):
        lhs = morphism_on_combo(m, extend_coderivation(m.source, w))
        rhs = coderivation_on_combo(m.target, extend_morphism(m, w))
        residual = combo_sub(lhs, rhs)
        if residual:
            violations.append((w, residual))
    return violations


# ---------------------------------------------------------------------------
# Maurer-Cartan theory


class MaurerCartanElement:
    """Even combination of generators: {Generator: NovikovPolynomial}."""

    def __init__(self, model: LInfinityModel, value: dict):
        self.model = model
        clean = {}
        for g, c in value.items():
            if model.generators.get(g.name) != g:
                raise ModelError(f"unknown generator {g.name} in MC element")
            if g.degree % 2:
                raise ModelError(
                    f"Maurer-Cartan elements must be even; {g.name} is odd"
                )
            c = c.truncate(model.cutoff) if model.cutoff else c
            if not c.is_zero():
                clean[g] = c
        self.value = clean

    def min_valuation(self):
        return min((c.valuation() for c in self.value.values()), default=math.inf)


def _mc_multisets(m: MaurerCartanElement, size: int):
    """(multiset word, rational weight ∏c/∏mult!) pairs of the given size."""
    gens = sorted(m.value, key=lambda g: g.sort_key)

    def rec(start: int, left: int, acc: list):
        if left == 0:
            yield list(acc)
            return
        for i in range(start, len(gens)):
            acc.append(gens[i])
            yield from rec(i, left - 1, acc)
            acc.pop()

    for letters in rec(0, size, []):
        weight = NovikovPolynomial.unit(m.model.cutoff)
        run = 1
        fact = 1
        for i, g in enumerate(letters):
            weight = weight * m.value[g]
            run = run + 1 if i and letters[i - 1] == g else 1
            fact *= run
        yield letters, weight.scale(Fraction(1, fact))


def _max_mc_size(m: MaurerCartanElement, cap: Optional[int]) -> int:
    if cap is not None:
        return cap
    v = m.min_valuation()
    if v == math.inf:
        return 0
    if v <= 0:
        raise ModelError(
            "MC element needs strictly positive valuation (or pass a size cap)"
        )
    if m.model.cutoff is None:
        raise ModelError(
            "MC sums need a model cutoff or an explicit size cap to converge"
        )
    return int(m.model.cutoff // v)


def mc_check(
    model: LInfinityModel,
    m: MaurerCartanElement,
    assume_nilpotent: bool = False,
    max_terms: Optional[int] = None,
) -> tuple[bool, Combo]:
    """Truncated Maurer-Cartan sum Σ 1/k! l^k(m,...,m); (pass, residual)."""
    max_arity = max((a for a, _ in model.operations), default=0)
    size_cap = max_arity if max_terms is None else min(max_terms, max_arity)
    if not assume_nilpotent and m.value:
        v = m.min_valuation()
        if v <= 0:
            raise ModelError(
                "MC element coefficients need strictly positive valuation"
            )
        if model.cutoff is not None:
            size_cap = min(size_cap, int(model.cutoff // v))
    residual: Combo = {}
    for k in range(1, size_cap + 1):
        for letters, weight in _mc_multisets(m, k):
            value = model.apply_operation([model.bar_letter(g) for g in letters])
            for u, c in value.items():
                combo_add_into(residual, u, c * weight)
    return (not residual), residual


def mc_pushforward(
    phi: LInfinityMorphism, m: MaurerCartanElement
) -> MaurerCartanElement:
    """Φ_*(m) = Σ 1/k! Φ^k(m,...,m); asserts MC in the target."""
    if phi.source is not m.model:
        raise ModelError("MC element does not live in the morphism source")
    if phi.target.algebra_mode != "module":
        raise ModelError("mc_pushforward needs a module-mode target")
    size_cap = phi.max_arity()
    if m.value:
        v = m.min_valuation()
        if v <= 0:
            raise ModelError(
                "MC element coefficients need strictly positive valuation"
            )
        if m.model.cutoff is not None:
            size_cap = min(size_cap, int(m.model.cutoff // v))
    value: dict[Generator, NovikovPolynomial] = {}
    for k in range(1, size_cap + 1):
        for letters, weight in _mc_multisets(m, k):
            for u, c in phi.component(letters).items():
                g = u.letters[0]
                prev = value.get(g, NovikovPolynomial.zero(phi.target.cutoff))
                value[g] = prev + c * weight
    result = MaurerCartanElement(phi.target, value)
    ok, residual = mc_check(phi.target, result)
    if not ok:
        raise IntegrityError(
            "pushforward of a Maurer-Cartan element fails the MC equation "
            f"in the target (residual on {len(residual)} words)"
        )
    return result


def exp_mc(m: MaurerCartanElement, max_terms: Optional[int] = None) -> Combo:
    """exp(m) = Σ_{k>=1} m^{⊙k}/k! as a bar-complex combination."""
    cap = _max_mc_size(m, max_terms)
    out: Combo = {}
    model = m.model
    for k in range(1, cap + 1):
        for letters, weight in _mc_multisets(m, k):
            sign, w = normalize_word([model.bar_letter(g) for g in letters])
            combo_add_into(out, w, weight.scale(sign))
    return out


def deform(model: LInfinityModel, m: MaurerCartanElement) -> LInfinityModel:
    """Deformed operations l^k_m(...) = Σ_{i>=0} 1/i! l^{k+i}(m,...,m,...).

    The i = 0 term is the undeformed operation, so deforming by 0 is the
    identity.  Keys are materialized on the subwords of stored operation keys.
    """
    ok, residual = mc_check(model, m)
    if not ok:
        raise IntegrityError(
            f"deform: MC residual nonzero on {len(residual)} words"
        )
    support = set(m.value)
    new_ops: dict[tuple[int, Word], Combo] = {}
    for (arity, word), combo in model.operations.items():
        slots = sorted(
            {g for g in word.letters if g in support}, key=lambda g: g.sort_key
        )
        counts = {g: sum(1 for l in word.letters if l == g) for g in slots}

        def rec(i: int, taken: list[tuple[Generator, int]]):
            removed = sum(t for _, t in taken)
            if i == len(slots):
                if removed == arity:
                    return
                weight = NovikovPolynomial.unit(model.cutoff)
                for g, t in taken:
                    for _ in range(t):
                        weight = weight * m.value[g]
                    weight = weight.scale(Fraction(1, math.factorial(t)))
                if weight.is_zero():
                    return
                remaining = list(word.letters)
                for g, t in taken:
                    for _ in range(t):
                        remaining.remove(g)
                sign, key = normalize_word(remaining)
                target = new_ops.setdefault((len(remaining), key), {})
                for u, c in combo.items():
                    combo_add_into(target, u, (c * weight).scale(sign))
                return
            g = slots[i]
            for t in range(counts[g] + 1):
                taken.append((g, t))
                rec(i + 1, taken)
                taken.pop()

        rec(0, [])
    return LInfinityModel(
        list(model.generators.values()),
        new_ops,
        grading_mode=model.grading_mode,
        algebra_mode=model.algebra_mode,
        cutoff=model.cutoff,
        filtered=False,
        augmentations=dict(model.augmentations),
    )


# ---------------------------------------------------------------------------
# augmentation extension (bar-level) and pushforward


def augmentation_hat(aug: Augmentation, w: Word) -> dict[tuple, NovikovPolynomial]:
    """ε̂(w): combination of t-power words, via set partitions of positions.

    Output keys are sorted tuples of t-exponents.  Blocks are ordered by
    first position and signs come from the source letter degrees.
    """
    degrees = [l.degree for l in w.letters]
    out: dict[tuple, NovikovPolynomial] = {}
    for part in set_partitions(list(range(len(w)))):
        blocks = sorted(part, key=lambda b: b[0])
        order = [p for b in blocks for p in b]
        sign = reorder_sign(degrees, order)
        tpolys = []
        for b in blocks:
            tp = aug.component(Word([w.letters[p] for p in b]))
            if not tp:
                tpolys = None
                break
            tpolys.append(tp)
        if tpolys is None:
            continue

        def rec(i: int, powers: list[int], coeff: NovikovPolynomial):
            if coeff.is_zero():
                return
            if i == len(tpolys):
                key = tuple(sorted(powers))
                prev = out.get(key)
                total = coeff if prev is None else prev + coeff
                if total.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = total
                return
            for p, c in tpolys[i].items():
                rec(i + 1, powers + [p], coeff * c)

        rec(0, [], NovikovPolynomial((((0, sign),))))
    return out


def augmentation_hat_combo(
    aug: Augmentation, combo: Combo
) -> dict[tuple, NovikovPolynomial]:
    out: dict[tuple, NovikovPolynomial] = {}
    for w, c in combo.items():
        for key, d in augmentation_hat(aug, w).items():
            total = out.get(key, NovikovPolynomial.zero(c.cutoff)) + c * d
            if total.is_zero():
                out.pop(key, None)
            else:
                out[key] = total
    return out


def augmentation_pushforward_mc(
    aug: Augmentation, m: MaurerCartanElement
) -> dict[int, NovikovPolynomial]:
    """ε_*(m) = Σ 1/k! ε^k(m,...,m) as a t-polynomial {power: coefficient}."""
    cap = aug.max_arity()
    if m.value:
        v = m.min_valuation()
        if v > 0 and m.model.cutoff is not None:
            cap = min(cap, int(m.model.cutoff // v))
    out: dict[int, NovikovPolynomial] = {}
    for k in range(1, cap + 1):
        for letters, weight in _mc_multisets(m, k):
            sign, key = normalize_word(letters)
            for p, c in aug.component(key).items():
                total = out.get(p, NovikovPolynomial.zero(m.model.cutoff)) + (
                    c * weight
                ).scale(sign)
                if total.is_zero():
                    out.pop(p, None)
                else:
                    out[p] = total
    return out


# ---------------------------------------------------------------------------
# linearization (cdga mode)


def _scalar_augmentation_values(
    model: LInfinityModel, eps: Augmentation
) -> dict[Generator, NovikovPolynomial]:
    values: dict[Generator, NovikovPolynomial] = {}
    for word in eps.components:
        if len(word) != 1:
            raise ModelError(
                "linearize needs a scalar augmentation (arity-1 components only)"
            )
    for g in model.ordered_generators:
        v = eps.scalar_on_generator(g)
        if v.is_zero():
            continue
        if g.degree % 2:
            raise ModelError(
                f"augmentation {eps.name} is nonzero on the odd generator {g.name}"
            )
        if not model.deg_equal(g.degree, 0):
            raise ModelError(
                f"augmentation {eps.name} is nonzero on {g.name} of degree "
                f"{g.degree}; scalar augmentations live on degree 0"
            )
        values[g] = v
    return values


def _eps_of_monomial(
    values: dict[Generator, NovikovPolynomial], w: Word, cutoff
) -> NovikovPolynomial:
    total = NovikovPolynomial.unit(cutoff)
    for g in w.letters:
        v = values.get(g)
        if v is None:
            return NovikovPolynomial.zero(cutoff)
        total = total * v
    return total


def linearize(
    model: LInfinityModel, eps: Augmentation
) -> tuple[LInfinityMorphism, LInfinityModel]:
    """Conjugate by F^ε and project: returns (F^ε, module-mode linearized model).

    F^ε is the substitution x -> x + ε(x) on the symmetric algebra; the
    linearized operations are the single-generator parts of F^ε∘l^k on
    generator inputs.  The scalar parts of the conjugated differential and of
    all higher conjugated operations are checked to vanish (this is exactly
    ε(l^k(...)) = 0, the chain-map condition and its higher analogues).
    """
    if model.algebra_mode != "cdga":
        raise ModelError("linearize expects a cdga-mode model")
    values = _scalar_augmentation_values(model, eps)

    for (arity, word), combo in model.operations.items():
        scalar = NovikovPolynomial.zero(model.cutoff)
        for u, c in combo.items():
            scalar = scalar + c * _eps_of_monomial(values, u, model.cutoff)
        if not scalar.is_zero():
            if arity == 1:
                raise ModelError(
                    f"augmentation {eps.name} fails the chain-map check on "
                    f"{model._word_str(word)}: ε(∂·) = {scalar}"
                )
            raise IntegrityError(
                f"scalar part of the conjugated arity-{arity} operation on "
                f"{model._word_str(word)} is nonzero: {scalar}"
            )

    f_components: dict[tuple[int, Word], Combo] = {}
    for g in model.ordered_generators:
        w = Word([g])
        combo: Combo = {w: NovikovPolynomial.unit(model.cutoff)}
        v = values.get(g)
        if v is not None:
            combo[Word(())] = v
        f_components[(1, w)] = combo
    f_eps = LInfinityMorphism(model, model, f_components)

    lin_ops: dict[tuple[int, Word], Combo] = {}
    for (arity, word), combo in model.operations.items():
        lin: Combo = {}
        for u, c in combo.items():
            for v, d in f_eps.apply_to_monomial(u).items():
                if len(v) == 1:
                    combo_add_into(lin, v, c * d)
        if lin:
            lin_ops[(arity, word)] = lin
    lin_model = LInfinityModel(
        list(model.generators.values()),
        lin_ops,
        grading_mode=model.grading_mode,
        algebra_mode="module",
        cutoff=model.cutoff,
        filtered=model.filtered,
    )
    return f_eps, lin_model


def inverse_scalar_augmentation(
    model: LInfinityModel, eps: Augmentation
) -> Augmentation:
    """The augmentation -ε, so that F^{-ε} inverts F^ε."""
    comps = {}
    for word, tpoly in eps.components.items():
        comps[word] = {p: -c for p, c in tpoly.items()}
    return Augmentation(f"-{eps.name}", comps)


def f_epsilon_map(model: LInfinityModel, eps: Augmentation) -> LInfinityMorphism:
    """Just the substitution morphism F^ε, without the conjugation checks."""
    values = _scalar_augmentation_values(model, eps)
    comps: dict[tuple[int, Word], Combo] = {}
    for g in model.ordered_generators:
        w = Word([g])
        combo: Combo = {w: NovikovPolynomial.unit(model.cutoff)}
        v = values.get(g)
        if v is not None:
            combo[Word(())] = v
        comps[(1, w)] = combo
    return LInfinityMorphism(model, model, comps)


# ---------------------------------------------------------------------------
# interval coefficients K[t,dt]


class IntervalElement:
    """P(t) + Q(t)dt with combination-valued polynomial coefficients.

    ``p`` and ``q`` are tuples of combinations, indexed by the t-power.
    """

    __slots__ = ("p", "q")

    def __init__(self, p: Sequence[Combo] = (), q: Sequence[Combo] = ()):
        self.p = tuple(dict(c) for c in p)
        self.q = tuple(dict(c) for c in q)

    @staticmethod
    def constant(combo: Combo) -> "IntervalElement":
        return IntervalElement((combo,), ())

    def eval_at(self, t0) -> Combo:
        t0 = Fraction(t0)
        out: Combo = {}
        power = Fraction(1)
        for combo in self.p:
            for w, c in combo.items():
                combo_add_into(out, w, c.scale(power))
            power *= t0
        return out


class IntervalModel:
    """The model with coefficients extended by K[t,dt].

    Only the structure maps and evaluation morphisms are provided; elements
    are split into degree-homogeneous parts internally so the sign in
    d(P dt) and the Leibniz-type dt-signs are well defined.
    """

    def __init__(self, model: LInfinityModel):
        self.model = model

    def _split_by_degree(self, combo: Combo) -> dict[int, Combo]:
        parts: dict[int, Combo] = {}
        for w, c in combo.items():
            parts.setdefault(w.degree, {})[w] = c
        return parts

    def l1(self, elt: IntervalElement) -> IntervalElement:
        """l¹(P + Q dt) = l¹(P) + (-1)^{|P|} (dP/dt) dt + l¹(Q) dt."""
        model = self.model
        p_out = [coderivation_on_combo(model, combo) for combo in elt.p]
        q_out: list[Combo] = [dict() for _ in range(max(len(elt.p) - 1, len(elt.q)))]
        for j in range(1, len(elt.p)):
            for deg, part in self._split_by_degree(elt.p[j]).items():
                sign = -1 if deg % 2 else 1
                for w, c in part.items():
                    combo_add_into(q_out[j - 1], w, c.scale(sign * j))
        for j, combo in enumerate(elt.q):
            for w, c in coderivation_on_combo(model, combo).items():
                combo_add_into(q_out[j], w, c)
        return IntervalElement(p_out, q_out)

    def lk(self, elts: Sequence[IntervalElement]) -> IntervalElement:
        """l^k(P₁+Q₁dt, ..., P_k+Q_kdt) = l^k(P₁..P_k)
        + Σ_i (-1)^{|P_{i+1}|+...+|P_k|} l^k(P₁..Q_i..P_k) dt."""
        k = len(elts)
        p_out = self._poly_lk([e.p for e in elts])
        q_parts: list[Combo] = []
        for i in range(k):
            sign = _tail_p_sign(elts, i)
            slots = [e.p for e in elts]
            slots[i] = elts[i].q
            for j, combo in enumerate(self._poly_lk(slots)):
                while len(q_parts) <= j:
                    q_parts.append({})
                for w, c in combo.items():
                    combo_add_into(q_parts[j], w, c.scale(sign))
        return IntervalElement(p_out, q_parts)

    def _poly_lk(self, slots: list) -> list[Combo]:
        """Multilinear extension over polynomial coefficients, by total power."""
        model = self.model
        out: list[Combo] = []

        def walk(i: int, power: int, letters: list, coeff: NovikovPolynomial):
            if coeff.is_zero():
                return
            if i == len(slots):
                while len(out) <= power:
                    out.append({})
                for u, c in model.apply_operation(letters).items():
                    combo_add_into(out[power], u, c * coeff)
                return
            for j, combo in enumerate(slots[i]):
                for w, c in combo.items():
                    letter = w if model.algebra_mode == "cdga" else w.letters[0]
                    walk(i + 1, power + j, letters + [letter], coeff * c)

        walk(0, 0, [], NovikovPolynomial.unit(model.cutoff))
        return out

    def eval_at(self, t0) -> "EvalMap":
        return EvalMap(self.model, Fraction(t0))


def _tail_p_sign(elts: Sequence[IntervalElement], i: int) -> int:
    """(-1)^{|P_{i+1}|+...+|P_k|} for homogeneous P-parts."""
    total = 0
    for e in elts[i + 1 :]:
        degs = {w.degree for combo in e.p for w in combo}
        if len(degs) > 1:
            raise ModelError("interval inputs must have homogeneous P-parts")
        total += degs.pop() if degs else 0
    return -1 if total % 2 else 1


class EvalMap:
    """The strict evaluation map at t = t0 (one-input component only)."""

    def __init__(self, model: LInfinityModel, t0: Fraction):
        self.model = model
        self.t0 = t0

    def apply(self, elt: IntervalElement) -> Combo:
        return elt.eval_at(self.t0)


class Homotopy:
    """A morphism into interval coefficients, stored per source word."""

    def __init__(
        self,
        source: LInfinityModel,
        target: LInfinityModel,
        components: dict,
    ):
        self.source = source
        self.target = target
        self.components: dict[tuple[int, Word], IntervalElement] = dict(components)

    @staticmethod
    def constant(phi: LInfinityMorphism) -> "Homotopy":
        comps = {
            key: IntervalElement.constant(combo)
            for key, combo in phi.components.items()
        }
        return Homotopy(phi.source, phi.target, comps)

    def endpoint(self, t0) -> LInfinityMorphism:
        comps = {
            key: elt.eval_at(t0) for key, elt in self.components.items()
        }
        comps = {k: v for k, v in comps.items() if v}
        return LInfinityMorphism(self.source, self.target, comps)
