"""Exact finite joint probability tables.

Tables are dense numpy arrays indexed in the canonical variable order of
their domain.  Arithmetic is double precision with explicit tolerances;
desk-scale products keep rounding error orders of magnitude below the
defaults used by the independence tests.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .errors import UnknownVariableError, ZeroProbabilityError
from .space import Assignment, VariableSpace

MASS_TOL = 1e-12
INDEP_TOL = 1e-9


class JointTable:
    """A probability distribution over a subset of a variable space.

    The empty-domain table is the trivial point mass (a single cell of
    weight one); it shows up as the belief attached to the all-intervened
    policy.
    """

    __slots__ = ("space", "domain", "probs")

    def __init__(self, space: VariableSpace, domain: Iterable[str], probs: np.ndarray):
        domain = space.canonical(domain)
        shape = tuple(space.card(n) for n in domain)
        probs = np.asarray(probs, dtype=float).reshape(shape)
        if np.any(probs < -MASS_TOL):
            raise ValueError("negative probability cell: min=%g" % probs.min())
        total = float(probs.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError("probabilities sum to %.17g, expected 1" % total)
        probs = np.asarray(np.clip(probs, 0.0, None))
        probs.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "probs", probs)

    def __setattr__(self, name, value):
        raise AttributeError("JointTable is immutable")

    @classmethod
    def from_cells(cls, space: VariableSpace, domain: Iterable[str], cells: Mapping[tuple, float]) -> "JointTable":
        domain = space.canonical(domain)
        shape = tuple(space.card(n) for n in domain)
        arr = np.zeros(shape)
        for key, value in cells.items():
            arr[tuple(key)] = value
        return cls(space, domain, arr)

    @classmethod
    def uniform(cls, space: VariableSpace, domain: Iterable[str]) -> "JointTable":
        domain = space.canonical(domain)
        shape = tuple(space.card(n) for n in domain)
        size = int(np.prod(shape)) if shape else 1
        return cls(space, domain, np.full(shape, 1.0 / size))

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.probs > 0.0))

    def _axes(self, subset: Iterable[str]) -> tuple:
        pos = {n: i for i, n in enumerate(self.domain)}
        out = []
        for name in subset:
            if name not in pos:
                raise UnknownVariableError("variable %r not in table domain %r" % (name, self.domain))
            out.append(pos[name])
        return tuple(out)

    def cell(self, assignment: Assignment) -> float:
        """Mass of a full cell of the domain."""
        if assignment.variables != self.domain:
            raise ValueError("cell lookup needs a full assignment of %r" % (self.domain,))
        return float(self.probs[assignment.values])

    def prob(self, event: Assignment) -> float:
        """Marginal mass of a partial assignment (the cylinder event)."""
        sub = self.marginal(event.variables)
        return float(sub.probs[event.values])

    def marginal(self, subset: Iterable[str]) -> "JointTable":
        """Sum out everything outside ``subset``."""
        subset = self.space.canonical(subset)
        self._axes(subset)  # membership check
        drop = self._axes(n for n in self.domain if n not in subset)
        arr = self.probs.sum(axis=drop) if drop else self.probs
        return JointTable(self.space, subset, arr)

    def conditional(self, target: Iterable[str], given: Assignment) -> "JointTable":
        """Distribution of ``target`` conditional on the event ``given``.

        Variables outside target and given are summed out.  A
        zero-probability conditioning event raises rather than returning
        NaNs.
        """
        target = self.space.canonical(target)
        if set(target) & set(given.variables):
            raise ValueError("conditional target overlaps the conditioning event")
        keep = self.marginal(tuple(target) + given.variables)
        given_axes = keep._axes(given.variables)
        index = [slice(None)] * len(keep.domain)
        for axis, value in zip(given_axes, given.values):
            index[axis] = value
        slab = keep.probs[tuple(index)]
        mass = float(slab.sum())
        if mass <= 0.0:
            raise ZeroProbabilityError(
                "conditioning event %r has zero probability" % (given,)
            )
        return JointTable(self.space, target, slab / mass)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, JointTable)
            and self.space == other.space
            and self.domain == other.domain
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash((self.space, self.domain, self.probs.tobytes()))

    def allclose(self, other: "JointTable", tol: float = INDEP_TOL) -> bool:
        return (
            self.domain == other.domain
            and bool(np.all(np.abs(self.probs - other.probs) <= tol))
        )

    def __repr__(self) -> str:
        return "JointTable(domain=%r)" % (self.domain,)


def grouped(table: JointTable, groups: Iterable[tuple]) -> np.ndarray:
    """Marginal array with axes reordered as the concatenation of groups."""
    order = tuple(n for g in groups for n in g)
    marg = table.marginal(order)
    perm = [marg.domain.index(n) for n in order]
    return np.transpose(marg.probs, perm) if perm else marg.probs


def cond_dependence_gap(table: JointTable, i_set, j_set, k_set) -> float:
    """Max deviation |P(I | K, J) - P(I | K)| over supported cells.

    Cells where P(K, J) = 0 are skipped; conditioning contexts x_K with
    zero mass are skipped entirely.  Returns 0.0 for vacuous inputs.
    """
    sp = table.space
    i_set, j_set, k_set = sp.canonical(i_set), sp.canonical(j_set), sp.canonical(k_set)
    if (set(i_set) & set(j_set)) or (set(i_set) & set(k_set)) or (set(j_set) & set(k_set)):
        raise ValueError("independence test needs pairwise disjoint sets")
    if not i_set or not j_set:
        return 0.0

    arr = grouped(table, (k_set, j_set, i_set))
    nk = int(np.prod([sp.card(n) for n in k_set])) if k_set else 1
    nj = int(np.prod([sp.card(n) for n in j_set]))
    ni = int(np.prod([sp.card(n) for n in i_set]))
    pkji = arr.reshape(nk, nj, ni)

    pkj = pkji.sum(axis=2)           # (nk, nj)
    pki = pkji.sum(axis=1)           # (nk, ni)
    pk = pkj.sum(axis=1)             # (nk,)

    gap = 0.0
    for k in range(nk):
        if pk[k] <= 0.0:
            continue
        base = pki[k] / pk[k]
        for j in range(nj):
            if pkj[k, j] <= 0.0:
                continue
            cond = pkji[k, j] / pkj[k, j]
            gap = max(gap, float(np.max(np.abs(cond - base))))
    return gap


def cond_independent(table: JointTable, i_set, j_set, k_set, tol: float = INDEP_TOL) -> bool:
    """Is I independent of J given K under the table, within ``tol``?"""
    return cond_dependence_gap(table, i_set, j_set, k_set) <= tol


def chain_factorization_residual(table: JointTable, parent_sets: Mapping[str, Iterable[str]]) -> float:
    """Worst-cell gap between the joint and the product of its per-variable
    conditionals given the proposed parent sets.

    Zero-mass parent contexts make the whole product zero (the limit
    convention), which agrees with the joint there, so such cells never
    contribute.
    """
    sp = table.space
    domain = table.domain
    conded = {}
    for name in domain:
        parents = sp.canonical(parent_sets.get(name, ()))
        if name in parents:
            raise ValueError("variable %r cannot be its own parent" % (name,))
        for p in parents:
            if p not in domain:
                raise UnknownVariableError("parent %r outside table domain" % (p,))
        joint = grouped(table, (parents, (name,)))
        denom = joint.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0.0, joint / np.where(denom > 0.0, denom, 1.0), 0.0)
        conded[name] = (parents, cond)

    residual = 0.0
    for values in sp.value_tuples(domain):
        at = dict(zip(domain, values))
        product = 1.0
        for name in domain:
            parents, cond = conded[name]
            key = tuple(at[p] for p in parents) + (at[name],)
            product *= float(cond[key])
            if product == 0.0:
                break
        actual = float(table.probs[values])
        residual = max(residual, abs(actual - product))
    return residual
