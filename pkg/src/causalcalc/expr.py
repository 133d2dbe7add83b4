"""Probability-expression trees for the identification engine.

A formula is kept in a fixed shape: summations outermost, then a product
of probability terms.  Each term is P(target | given, do(...)) where every
variable reference carries either a concrete value index (from the query)
or a bound summation symbol.  Identified formulas contain no do-entries in
any term and can be evaluated directly on an observational joint table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .dist import JointTable
from .space import Assignment

# a variable reference is a (name, slot) pair; the slot is an int value
# index or a string symbol bound by an enclosing sum


@dataclass(frozen=True)
class PTerm:
    """One probability factor P(target | given, do(do))."""

    target: tuple
    given: tuple = ()
    do: tuple = ()

    def variables(self) -> set:
        return {name for name, _ in self.target + self.given + self.do}

    def symbols(self) -> set:
        return {slot for _, slot in self.target + self.given + self.do if isinstance(slot, str)}


@dataclass(frozen=True)
class Formula:
    """Sum-of-products normal shape: sums outermost over one product."""

    sums: tuple  # ((var, symbol), ...)
    factors: tuple  # (PTerm, ...)

    def do_free(self) -> bool:
        return all(not f.do for f in self.factors)

    def symbols(self) -> set:
        return {sym for _, sym in self.sums}


def _slot_key(slot) -> str:
    return "=%d" % slot if isinstance(slot, int) else "~%s" % slot


def _entries_key(entries: tuple, order: tuple) -> str:
    ranked = sorted(entries, key=lambda e: order.index(e[0]))
    return ",".join("%s%s" % (name, _slot_key(slot)) for name, slot in ranked)


def _term_key(term: PTerm, order: tuple) -> str:
    return "P(%s|%s|%s)" % (
        _entries_key(term.target, order),
        _entries_key(term.given, order),
        _entries_key(term.do, order),
    )


def _factor_rank(term: PTerm, order: tuple) -> tuple:
    """Factors print effect-first: highest-indexed target variable leads."""
    lead = max(order.index(name) for name, _ in term.target) if term.target else -1
    return (-lead, _term_key(term, order))


def _rename(entries: tuple, mapping: Mapping[str, str]) -> tuple:
    return tuple(
        (name, mapping.get(slot, slot) if isinstance(slot, str) else slot)
        for name, slot in entries
    )


def rename_symbols(formula: Formula, mapping: Mapping[str, str]) -> Formula:
    sums = tuple((var, mapping.get(sym, sym)) for var, sym in formula.sums)
    factors = tuple(
        PTerm(_rename(f.target, mapping), _rename(f.given, mapping), _rename(f.do, mapping))
        for f in formula.factors
    )
    return Formula(sums, factors)


def _serialize(formula: Formula, order: tuple) -> str:
    sums = sorted(formula.sums, key=lambda vs: (order.index(vs[0]), vs[1]))
    factors = sorted(formula.factors, key=lambda f: _factor_rank(f, order))
    return "sum[%s] %s" % (
        ";".join("%s~%s" % vs for vs in sums),
        " * ".join(_term_key(f, order) for f in factors),
    )


def canonical_key(formula: Formula, order: tuple) -> str:
    """Serialized normal form, invariant under sum reordering, factor
    reordering, and renaming of bound symbols.

    Symbols are first ordered by a renaming-invariant signature (where
    each one occurs, with every symbol masked); only signature ties fall
    back to brute-force permutation, which keeps the common case linear.
    """
    syms = sorted(formula.symbols())
    if not syms:
        return _serialize(formula, order)

    masked = rename_symbols(formula, {s: "?" for s in syms})
    masked_keys = [_term_key(f, order) for f in masked.factors]

    def signature(sym):
        occ = []
        for f, mkey in zip(formula.factors, masked_keys):
            for section, entries in (("t", f.target), ("g", f.given), ("d", f.do)):
                for name, slot in entries:
                    if slot == sym:
                        occ.append((mkey, section, name))
        for var, s in formula.sums:
            if s == sym:
                occ.append(("sum", var, ""))
        return tuple(sorted(occ))

    sigs = {s: signature(s) for s in syms}
    ranked = sorted(syms, key=lambda s: (sigs[s], s))
    groups = []
    for sym in ranked:
        if groups and sigs[groups[-1][0]] == sigs[sym]:
            groups[-1].append(sym)
        else:
            groups.append([sym])

    best = None
    for perm_groups in itertools.product(*(itertools.permutations(g) for g in groups)):
        flat = [s for g in perm_groups for s in g]
        mapping = {s: "s%d" % k for k, s in enumerate(flat)}
        key = _serialize(rename_symbols(formula, mapping), order)
        if best is None or key < best:
            best = key
    return best


def normalize(formula: Formula, order: tuple) -> Formula:
    """Reorder sums and factors into canonical display order and rename
    bound symbols to the display scheme (lowercased variable name,
    numbered on collision with a variable name or an earlier symbol)."""
    sums = sorted(formula.sums, key=lambda vs: (order.index(vs[0]), vs[1]))
    mapping = {}
    display = []
    used = set(order)  # a display symbol must never spell a variable name
    for var, sym in sums:
        base = var.lower()
        candidate, n = base, 1
        while candidate in used:
            n += 1
            candidate = "%s%d" % (base, n)
        used.add(candidate)
        mapping[sym] = candidate
        display.append((var, candidate))
    renamed = rename_symbols(formula, mapping)
    factors = tuple(sorted(renamed.factors, key=lambda f: _factor_rank(f, order)))
    return Formula(tuple(display), factors)


def _entries_text(entries: tuple, order: tuple) -> str:
    ranked = sorted(entries, key=lambda e: order.index(e[0]))
    return ",".join(
        "%s=%s" % (name, slot) for name, slot in ranked
    )


def render(formula: Formula, order: tuple) -> str:
    """Canonical ASCII form, e.g. ``sum_a[ P(L=1|A=a) * P(A=a|E=1) ]``."""
    norm = normalize(formula, order)
    parts = []
    for f in norm.factors:
        inner = _entries_text(f.target, order)
        conds = []
        if f.given:
            conds.append(_entries_text(f.given, order))
        if f.do:
            conds.append("do(%s)" % _entries_text(f.do, order))
        if conds:
            inner += "|" + ",".join(conds)
        parts.append("P(%s)" % inner)
    body = " * ".join(parts) if parts else "1"
    for var, sym in reversed(norm.sums):
        body = "sum_%s[ %s ]" % (sym, body)
    return body


def _resolve(entries: tuple, env: Mapping[str, int]) -> list:
    out = []
    for name, slot in entries:
        value = env[slot] if isinstance(slot, str) else slot
        out.append((name, value))
    return out


def evaluate(formula: Formula, table: JointTable, env: Mapping[str, int] | None = None) -> float:
    """Evaluate a do-free formula on an observational joint table.

    Terms conditioned on a zero-mass event contribute zero; with full
    support (the normal regime) this convention is never exercised.
    """
    env = dict(env or {})

    def term_value(term: PTerm) -> float:
        if term.do:
            raise ValueError("cannot evaluate a term that still contains do(): %r" % (term,))
        given = Assignment(table.space, _resolve(term.given, env))
        both = Assignment(table.space, _resolve(term.target, env)).merge(given)
        denom = table.prob(given) if len(given) else 1.0
        if denom <= 0.0:
            return 0.0
        return table.prob(both) / denom

    def rec(sums) -> float:
        if not sums:
            value = 1.0
            for f in formula.factors:
                value *= term_value(f)
                if value == 0.0:
                    return 0.0
            return value
        (var, sym), rest = sums[0], sums[1:]
        total = 0.0
        for v in range(table.space.card(var)):
            env[sym] = v
            total += rec(rest)
        del env[sym]
        return total

    return rec(formula.sums)
