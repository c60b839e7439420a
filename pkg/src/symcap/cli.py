"""The ``cap`` command line tool.

Subcommands
-----------

``cap capacity``
    Capacity tables for a domain: ``--family`` one of ``eh`` (``gh`` is an
    alias), ``ech``, ``g-tangency``, ``r-points``; ``--domain`` like
    ``E:1,2``, ``P:1,3``, ``B`` or ``B:2`` (``E:1,inf`` is accepted for the
    eh family only); ``--k`` a single index or an ``a..b`` range.  Range
    entries are computed in parallel and emitted in ascending order.  The
    CSV table is cached under a content key (one file per command kind and
    key, next to its manifest); ``--no-cache`` bypasses the cache and the
    ``SYMCAP_CACHE_DIR`` environment variable overrides the cache root.

``cap obstruct``
    Embedding obstructions: with ``--stabilized``, the best closed-form
    lower bound on the scaling factor for the stabilized problem; without
    it, a four-dimensional capacity-sequence comparison up to ``--K``.

``cap linf``
    Model-file operations: ``check``, ``linearize``, ``mc``, ``solve-gb``.

``cap gw``
    The tangency rewriting calculus: ``reduce`` prints the step-by-step
    expansion, ``evaluate`` reduces and evaluates against ``--table``.

Machine-readable output (CSV cells, solver levels, evaluated counts) uses
exact rationals; decimal renderings only appear in human-facing summaries.

Exit codes: 0 success, 1 usage error, 2 infeasible / not found below the
configured cutoff, 3 integrity failure (a model or table violating its
contract).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, gw
from .capacities import (
    NO_FORMULA,
    NO_OBSTRUCTION,
    NOT_FOUND,
    DomainDescriptor,
    g_tangency,
    gb_solver,
    obstruct_4d_ellipsoid,
    r_points_ball,
    stabilized_obstruction,
)
from .linfty import (
    IntegrityError,
    MaurerCartanElement,
    ModelError,
    check_linfty_relations,
    linearize,
    mc_check,
)
from .modelfile import load_model, print_model
from .novikov import fmt_rational, parse_novikov
from .spectra import INF, capacity_sequence_ECH, capacity_sequence_EH

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_INTEGRITY = 3


class CliUsageError(Exception):
    pass


class InfeasibleError(Exception):
    pass


# ---------------------------------------------------------------------------
# shared plumbing


@dataclass
class RunManifest:
    """Reproducibility record: no timestamps, so identical runs collide."""

    command: str
    parameters: dict
    version: str = __version__
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "parameters": self.parameters,
            "version": self.version,
            "outputs": self.outputs,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def cache_root() -> Path:
    env = os.environ.get("SYMCAP_CACHE_DIR")
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "symcap"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _parse_k_range(text: str) -> list[int]:
    if ".." in text:
        lo_text, _, hi_text = text.partition("..")
        lo, hi = int(lo_text), int(hi_text)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise CliUsageError(f"bad index range {text!r}")
    return list(range(lo, hi + 1))


def _parse_axis(text: str):
    if text.strip().lower() in ("inf", "infinity"):
        return INF
    value = Fraction(text)
    if value <= 0:
        raise CliUsageError("domain parameters must be positive")
    return value


def _parse_domain(text: str) -> tuple[str, tuple]:
    """``E:1,2`` / ``P:2,3`` / ``B`` / ``B:2`` -> (kind, sorted axes)."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().upper()
    try:
        if kind == "B":
            scale = Fraction(rest) if rest else Fraction(1)
            if scale <= 0:
                raise CliUsageError("domain parameters must be positive")
            return "ball", (scale,)
        if kind in ("E", "P"):
            axes = tuple(sorted(_parse_axis(x) for x in rest.split(",")))
            if len(axes) < 2:
                raise CliUsageError(f"{kind} needs at least two parameters")
            name = "ellipsoid" if kind == "E" else "polydisk"
            return name, axes
    except (ValueError, ZeroDivisionError) as exc:
        raise CliUsageError(f"cannot parse domain {text!r}: {exc}") from None
    raise CliUsageError(f"unknown domain {text!r} (use E:a,b / P:a,b / B[:c])")


def _descriptor(kind: str, axes: tuple) -> DomainDescriptor:
    if any(x == INF for x in axes):
        raise CliUsageError(
            "infinite factors are supported only in the eh family"
        )
    return DomainDescriptor(kind, axes)


def _domain_text(kind: str, axes: tuple) -> str:
    prefix = {"ball": "B", "ellipsoid": "E", "polydisk": "P"}[kind]
    return prefix + ":" + ",".join(
        "inf" if x == INF else fmt_rational(x) for x in axes
    )


# ---------------------------------------------------------------------------
# cap capacity


def _capacity_value(family: str, kind: str, axes: tuple, k: int):
    if family in ("eh", "gh"):
        if kind == "polydisk":
            raise CliUsageError(
                "the eh family has closed forms for ellipsoids and balls only"
            )
        seq_axes = axes * 2 if kind == "ball" else axes
        return capacity_sequence_EH(seq_axes, k)
    if family == "ech":
        if kind == "polydisk":
            raise CliUsageError("the ech family covers ellipsoids and balls")
        if any(x == INF for x in axes):
            raise CliUsageError(
                "infinite factors are supported only in the eh family"
            )
        a, b = (axes * 2)[:2]
        return capacity_sequence_ECH(a, b, k)
    if family == "g-tangency":
        return g_tangency(_descriptor(kind, axes), k)
    if family == "r-points":
        if kind != "ball":
            raise CliUsageError("the r-points family is a ball invariant")
        return axes[0] * r_points_ball(k)
    raise CliUsageError(f"unknown family {family!r}")


def _format_cell(value) -> str:
    return value if isinstance(value, str) else fmt_rational(value)


def _capacity_rows(family: str, kind: str, axes: tuple, ks: list[int]):
    with ThreadPoolExecutor(max_workers=min(8, len(ks))) as pool:
        values = list(
            pool.map(lambda k: _capacity_value(family, kind, axes, k), ks)
        )
    rows = []
    for k, value in zip(ks, values):
        exact = _format_cell(value)
        decimal = "" if isinstance(value, str) else f"{float(value):.6g}"
        rows.append((str(k), exact, decimal))
    return rows


def _rows_to_csv(rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("k", "exact", "decimal"))
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def cmd_capacity(args) -> int:
    family = "eh" if args.family == "gh" else args.family
    kind, axes = _parse_domain(args.domain)
    ks = _parse_k_range(args.k)
    parameters = {
        "domain": _domain_text(kind, axes),
        "family": family,
        "k": [ks[0], ks[-1]],
    }
    manifest = RunManifest(command="capacity", parameters=parameters)
    key = hashlib.sha256(
        json.dumps(parameters, sort_keys=True).encode("utf-8")
        + __version__.encode("utf-8")
    ).hexdigest()
    table_path = cache_root() / "capacity" / f"{key}.csv"
    data: Optional[bytes] = None
    if not args.no_cache and table_path.exists():
        data = table_path.read_bytes()
    if data is None:
        rows = _capacity_rows(family, kind, axes, ks)
        data = _rows_to_csv(rows)
        if not args.no_cache:
            manifest.outputs[table_path.name] = hashlib.sha256(data).hexdigest()
            _atomic_write(table_path, data)
            _atomic_write(
                table_path.with_suffix(".manifest.json"),
                manifest.to_json().encode("utf-8"),
            )
    if args.output:
        _atomic_write(Path(args.output), data)
    if args.manifest:
        manifest.outputs.setdefault(
            table_path.name, hashlib.sha256(data).hexdigest()
        )
        _atomic_write(Path(args.manifest), manifest.to_json().encode("utf-8"))
    cells = [line.split(",")[1] for line in data.decode().splitlines()[1:]]
    if len(cells) == 1 and cells[0] in (NO_FORMULA, NOT_FOUND):
        print(cells[0])
        return EXIT_INFEASIBLE
    print(",".join(cells))
    return EXIT_OK


# ---------------------------------------------------------------------------
# cap obstruct


def cmd_obstruct(args) -> int:
    src_kind, src_axes = _parse_domain(args.source)
    source = _descriptor(src_kind, src_axes)
    if args.stabilized:
        family = {"B": "ball", "P": "polydisk"}.get(
            args.target.upper().partition(":")[0], args.target
        )
        bound, witness = stabilized_obstruction(source, family)
        print(f"bound {fmt_rational(bound)}, witness k={witness}")
        return EXIT_OK
    tgt_kind, tgt_axes = _parse_domain(args.target)
    target = _descriptor(tgt_kind, tgt_axes)
    for dom in (source, target):
        if dom.kind == "polydisk":
            raise CliUsageError(
                "the four-dimensional comparison uses ellipsoid/ball sequences"
            )
    a, b = (source.params * 2)[:2]
    c, d = (target.params * 2)[:2]
    verdict = obstruct_4d_ellipsoid(a, b, c, d, args.K)
    if verdict == NO_OBSTRUCTION:
        print(f"no obstruction below K={args.K}")
        return EXIT_OK
    k = verdict
    cs = capacity_sequence_ECH(a, b, k)
    ct = capacity_sequence_ECH(c, d, k)
    print(
        f"obstructed at k={k}: c_{k}({source}) = {fmt_rational(cs)} > "
        f"{fmt_rational(ct)} = c_{k}({target})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# cap linf


def _word_text(word) -> str:
    names = []
    for letter in word.letters:
        if hasattr(letter, "letters"):  # cdga: letters are monomials
            names.append("*".join(g.name for g in letter.letters) or "1")
        else:
            names.append(letter.name)
    return "(" + ",".join(names) + ")"


def _pick_augmentation(model, name: Optional[str]):
    if name is not None:
        if name not in model.augmentations:
            raise CliUsageError(f"no augmentation named {name!r}")
        return model.augmentations[name]
    if len(model.augmentations) != 1:
        raise CliUsageError(
            "model has several augmentations; pass --aug explicitly"
        )
    return next(iter(model.augmentations.values()))


def cmd_linf(args) -> int:
    model = load_model(args.model)
    if args.linf_cmd == "check":
        violations = check_linfty_relations(model, args.l)
        if not violations:
            print("pass")
            return EXIT_OK
        word, residual = violations[0]
        print(
            f"fail: {len(violations)} violated relations up to word length "
            f"{args.l}; first at word {_word_text(word)}",
            file=sys.stderr,
        )
        for u in sorted(residual, key=lambda w: w.sort_key):
            print(f"  residual {_word_text(u)}: {residual[u]}", file=sys.stderr)
        return EXIT_INTEGRITY
    if args.linf_cmd == "solve-gb":
        b = _parse_t_word(args.b)
        cutoff = args.action_cutoff
        if cutoff is None:
            top = max(g.action for g in model.ordered_generators)
            cutoff = top * args.l
        level = gb_solver(model, b, args.l, cutoff, augmentation=args.aug)
        if level == NOT_FOUND:
            print(
                f"{NOT_FOUND} (word cap {args.l}, action cutoff "
                f"{fmt_rational(cutoff)})"
            )
            return EXIT_INFEASIBLE
        print(fmt_rational(level))
        return EXIT_OK
    if args.linf_cmd == "mc":
        element = _parse_mc_element(model, args.m)
        ok, residual = mc_check(
            model, element, max_terms=args.max_terms
        )
        if ok:
            print("Maurer-Cartan: pass")
            return EXIT_OK
        worst = min(residual, key=lambda w: w.sort_key)
        print(
            f"Maurer-Cartan: fail; residual at {_word_text(worst)} is "
            f"{residual[worst]}"
        )
        return EXIT_INFEASIBLE
    if args.linf_cmd == "linearize":
        eps = _pick_augmentation(model, args.aug)
        _, linearized = linearize(model, eps)
        text = print_model(linearized)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            print(text, end="")
        return EXIT_OK
    raise CliUsageError(f"unknown linf subcommand {args.linf_cmd!r}")


def _parse_t_word(text: str) -> tuple[int, ...]:
    powers = []
    for chunk in text.replace("⊙", "*").split("*"):
        chunk = chunk.strip()
        if chunk == "t":
            powers.append(1)
            continue
        if not chunk.startswith("t^"):
            raise CliUsageError(
                f"cannot parse {text!r}: expected t-powers like t^0*t^3"
            )
        powers.append(int(chunk[2:]))
    if any(p < 0 for p in powers):
        raise CliUsageError("t-powers must be nonnegative")
    return tuple(sorted(powers))


def _parse_mc_element(model, text: str) -> MaurerCartanElement:
    value = {}
    for pair in text.split(","):
        name, sep, coeff_text = pair.partition(":")
        if not sep:
            raise CliUsageError(
                f"cannot parse {pair!r}: expected generator:coefficient"
            )
        try:
            g = model.gen(name.strip())
        except KeyError:
            raise CliUsageError(f"unknown generator {name.strip()!r}") from None
        value[g] = parse_novikov(coeff_text.strip(), model.cutoff)
    return MaurerCartanElement(model, value)


# ---------------------------------------------------------------------------
# cap gw


def cmd_gw(args) -> int:
    expr = gw.parse_constraint_expression(args.expression)
    table = gw.load_table(args.table) if args.table else gw.BaseInvariantTable({})
    rng = random.Random(args.seed) if args.seed is not None else None
    if args.gw_cmd == "reduce":
        trace: list = []
        reduced = gw.reduce_combination(expr, rng=rng, trace=trace)
        for key, expansion in trace:
            print(f"{gw.format_key(key)} ->")
            for sub, coeff in expansion:
                print(f"    {coeff} * {gw.format_key(sub)}")
        print(f"result: {gw.format_combination(reduced)}")
        return EXIT_OK
    reduced = gw.reduce_combination(expr, rng=rng)
    try:
        value = gw.evaluate(reduced, table)
    except KeyError as exc:
        raise InfeasibleError(exc.args[0]) from None
    print(fmt_rational(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2; remap usage errors to 1
        raise CliUsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="cap",
        description="Symplectic capacity tables and embedding obstructions.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", help="capacity tables for a domain")
    cap.add_argument(
        "--family",
        required=True,
        choices=["eh", "gh", "ech", "g-tangency", "r-points"],
    )
    cap.add_argument("--domain", required=True, help="E:a,b / P:a,b / B[:c]")
    cap.add_argument("--k", required=True, help="index or range a..b")
    cap.add_argument("--output", "-o", help="also write the CSV table here")
    cap.add_argument("--manifest", help="write the run manifest JSON here")
    cap.add_argument("--no-cache", action="store_true")
    cap.set_defaults(func=cmd_capacity)

    obs = sub.add_parser("obstruct", help="embedding obstructions")
    obs.add_argument("--source", required=True)
    obs.add_argument("--target", required=True)
    obs.add_argument(
        "--stabilized",
        action="store_true",
        help="closed-form bound for the stabilized problem (target B or P)",
    )
    obs.add_argument("--K", type=int, default=100, help="comparison depth")
    obs.set_defaults(func=cmd_obstruct)

    linf = sub.add_parser("linf", help="model-file operations")
    linf_sub = linf.add_subparsers(dest="linf_cmd", required=True)
    for name in ("check", "linearize", "mc", "solve-gb"):
        p = linf_sub.add_parser(name)
        p.add_argument("model")
        p.set_defaults(func=cmd_linf)
        if name == "check":
            p.add_argument("--l", type=int, default=3, help="word length cap")
        elif name == "linearize":
            p.add_argument("--aug", help="augmentation name")
            p.add_argument("--output", "-o")
        elif name == "mc":
            p.add_argument(
                "--m", required=True, help="element, e.g. x:1*T^1,y:1*T^1"
            )
            p.add_argument("--max-terms", type=int, default=None)
        else:
            p.add_argument("--b", required=True, help="t-power word, e.g. t^3")
            p.add_argument("--l", type=int, default=3, help="word length cap")
            p.add_argument("--aug", default=None, help="augmentation name")
            p.add_argument(
                "--action-cutoff",
                type=Fraction,
                default=None,
                help="search levels up to this action",
            )

    gwp = sub.add_parser("gw", help="tangency rewriting calculus")
    gw_sub = gwp.add_subparsers(dest="gw_cmd", required=True)
    for name in ("reduce", "evaluate"):
        p = gw_sub.add_parser(name)
        p.add_argument("expression", help='e.g. "CP2 d=2 <(T^4 p)>"')
        p.add_argument("--table", help="base invariant table file")
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=cmd_gw)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliUsageError as exc:
        print(f"cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"cap: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ModelError, IntegrityError) as exc:
        print(f"cap: integrity: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except FileNotFoundError as exc:
        print(f"cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
