"""Finite state spaces, partial assignments, intervention policies, and acts.

Values are dense 0-based indices throughout the engine; human-readable value
labels are front-end sugar only.  Everything here is immutable after
construction.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping

from .errors import UnknownVariableError


class VariableSpace:
    """An ordered list of finite-valued variables.

    The declaration order is fixed and defines the canonical enumeration
    order of outcomes: earlier variables are more significant, the last
    one varies fastest.  Single-valued variables are rejected because a
    constant carries no uncertainty and breaks conditional bookkeeping.
    """

    __slots__ = ("names", "cards", "_pos")

    def __init__(self, names: Iterable[str], cards: Iterable[int]):
        names = tuple(names)
        cards = tuple(int(c) for c in cards)
        if len(names) != len(cards):
            raise ValueError("need one cardinality per variable name")
        if not all(isinstance(n, str) and n for n in names):
            raise ValueError("variable names must be non-empty strings")
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names: %r" % (names,))
        for n, c in zip(names, cards):
            if c < 2:
                raise ValueError("variable %r has cardinality %d; need >= 2" % (n, c))
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "_pos", {n: i for i, n in enumerate(names)})

    def __setattr__(self, name, value):
        raise AttributeError("VariableSpace is immutable")

    def __contains__(self, name: str) -> bool:
        return name in self._pos

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VariableSpace)
            and self.names == other.names
            and self.cards == other.cards
        )

    def __hash__(self) -> int:
        return hash((self.names, self.cards))

    def __repr__(self) -> str:
        inner = ", ".join("%s:%d" % nc for nc in zip(self.names, self.cards))
        return "VariableSpace(%s)" % inner

    def position(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise UnknownVariableError("unknown variable %r" % (name,)) from None

    def card(self, name: str) -> int:
        return self.cards[self.position(name)]

    def canonical(self, subset: Iterable[str]) -> tuple:
        """Return ``subset`` as a tuple in declaration order.

        Raises on unknown names and on duplicates so that set-like inputs
        and malformed CLI strings fail loudly.
        """
        subset = tuple(subset)
        positions = [self.position(n) for n in subset]
        if len(set(positions)) != len(positions):
            raise ValueError("duplicate variables in subset: %r" % (subset,))
        return tuple(n for _, n in sorted(zip(positions, subset)))

    def value_tuples(self, subset: Iterable[str]) -> Iterator[tuple]:
        """Iterate the outcome grid of ``subset`` in canonical order."""
        subset = self.canonical(subset)
        return itertools.product(*(range(self.card(n)) for n in subset))


class Assignment:
    """A partial map from variables to value indices.

    Assignments are value objects: two assignments over the same space with
    the same bindings compare (and hash) equal.
    """

    __slots__ = ("space", "items")

    def __init__(self, space: VariableSpace, bindings: Mapping[str, int] | Iterable = ()):
        if isinstance(bindings, Mapping):
            pairs = list(bindings.items())
        else:
            pairs = [(n, v) for n, v in bindings]
        seen = {}
        for name, value in pairs:
            pos = space.position(name)
            value = int(value)
            if not 0 <= value < space.cards[pos]:
                raise ValueError(
                    "value %d out of range for variable %r (cardinality %d)"
                    % (value, name, space.cards[pos])
                )
            if name in seen and seen[name] != value:
                raise ValueError("conflicting bindings for %r" % (name,))
            seen[name] = value
        items = tuple(sorted(seen.items(), key=lambda nv: space.position(nv[0])))
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "items", items)

    def __setattr__(self, name, value):
        raise AttributeError("Assignment is immutable")

    @property
    def bindings(self) -> dict:
        return dict(self.items)

    @property
    def variables(self) -> tuple:
        return tuple(n for n, _ in self.items)

    @property
    def values(self) -> tuple:
        return tuple(v for _, v in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.items)

    def __getitem__(self, name: str) -> int:
        for n, v in self.items:
            if n == name:
                return v
        raise KeyError(name)

    def get(self, name: str, default=None):
        for n, v in self.items:
            if n == name:
                return v
        return default

    def restrict(self, subset: Iterable[str]) -> "Assignment":
        keep = set(subset)
        return Assignment(self.space, [(n, v) for n, v in self.items if n in keep])

    def merge(self, other: "Assignment") -> "Assignment":
        """Union of two assignments; conflicting bindings raise."""
        if other.space != self.space:
            raise ValueError("cannot merge assignments over different spaces")
        return Assignment(self.space, self.items + other.items)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Assignment)
            and self.space == other.space
            and self.items == other.items
        )

    def __hash__(self) -> int:
        return hash((self.space, self.items))

    def __repr__(self) -> str:
        inner = ", ".join("%s=%d" % nv for nv in self.items)
        return "{%s}" % inner


class Policy(Assignment):
    """An assignment read as a set of interventions.

    Variables absent from the bindings are left to nature; ``unintervened()``
    is that remainder.  The empty policy is the purely observational world.
    """

    def unintervened(self) -> tuple:
        bound = set(self.variables)
        return tuple(n for n in self.space.names if n not in bound)

    def intervened(self) -> tuple:
        return self.variables

    def __repr__(self) -> str:
        inner = ", ".join("%s=%d" % nv for nv in self.items)
        return "do(%s)" % inner


class Act:
    """A monetary act: a payoff for every outcome of its domain.

    Acts over a subset of variables extend cylindrically (payoff ignores
    coordinates outside the domain).  The payoff table must be total over
    the domain's outcome grid.
    """

    __slots__ = ("space", "domain", "payoffs")

    def __init__(self, space: VariableSpace, domain: Iterable[str], payoffs: Mapping[tuple, float]):
        domain = space.canonical(domain)
        table = {}
        for key, value in payoffs.items():
            key = tuple(int(k) for k in key)
            if len(key) != len(domain):
                raise ValueError("payoff key %r does not match domain %r" % (key, domain))
            for name, v in zip(domain, key):
                if not 0 <= v < space.card(name):
                    raise ValueError("payoff key %r out of range for %r" % (key, domain))
            table[key] = float(value)
        expected = 1
        for name in domain:
            expected *= space.card(name)
        if len(table) != expected:
            raise ValueError(
                "payoffs must be total over the domain grid: got %d cells, need %d"
                % (len(table), expected)
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "payoffs", table)

    def __setattr__(self, name, value):
        raise AttributeError("Act is immutable")

    @classmethod
    def constant(cls, space: VariableSpace, value: float) -> "Act":
        return cls(space, (), {(): float(value)})

    def payoff(self, outcome: "Assignment | tuple") -> float:
        """Payoff at an outcome; partial outcomes must cover the domain."""
        if isinstance(outcome, Assignment):
            key = tuple(outcome[n] for n in self.domain)
        else:
            key = tuple(outcome)
        return self.payoffs[key]

    def __add__(self, other: "Act") -> "Act":
        if not isinstance(other, Act) or other.space != self.space or other.domain != self.domain:
            return NotImplemented
        return Act(self.space, self.domain, {k: v + other.payoffs[k] for k, v in self.payoffs.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Act)
            and self.space == other.space
            and self.domain == other.domain
            and self.payoffs == other.payoffs
        )

    def __hash__(self):
        return hash((self.space, self.domain, tuple(sorted(self.payoffs.items()))))


def enumerate_outcomes(space: VariableSpace, subset: Iterable[str]) -> list:
    """All full assignments of ``subset`` in canonical mixed-radix order.

    The empty subset yields the single empty assignment.
    """
    subset = space.canonical(subset)
    return [
        Assignment(space, zip(subset, values))
        for values in space.value_tuples(subset)
    ]


def indicator_act(space: VariableSpace, event: Iterable[Assignment], domain: Iterable[str] | None = None) -> Act:
    """The act paying 1 on event members and 0 elsewhere.

    All event members must share one domain; for the empty event pass
    ``domain`` explicitly (defaults to the empty domain, i.e. the
    constant-0 act).
    """
    event = list(event)
    if event:
        domains = {a.variables for a in event}
        if len(domains) > 1:
            raise ValueError("indicator event mixes domains: %r" % (sorted(domains),))
        inferred = event[0].variables
        if domain is not None and space.canonical(domain) != inferred:
            raise ValueError("explicit domain does not match event domain")
        domain = inferred
    else:
        domain = space.canonical(domain) if domain is not None else ()
    member_keys = {a.values for a in event}
    payoffs = {
        values: (1.0 if values in member_keys else 0.0)
        for values in space.value_tuples(domain)
    }
    return Act(space, domain, payoffs)


def iter_policies(space: VariableSpace) -> Iterator[Policy]:
    """All policies of the space, i.e. the grid over (value or leave-alone).

    Deterministic order: mixed-radix over declaration order with
    "unintervened" sorting before the value indices.
    """
    options = [(None, *range(c)) for c in space.cards]
    for combo in itertools.product(*options):
        yield Policy(
            space,
            [(n, v) for n, v in zip(space.names, combo) if v is not None],
        )


def policy_count(space: VariableSpace) -> int:
    n = 1
    for c in space.cards:
        n *= c + 1
    return n
