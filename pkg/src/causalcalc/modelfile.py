"""Parser, validator, and serializer for ``.cm`` model files.

The format declares variables (with optional value labels), edges,
conditional-probability blocks, and optional explicit belief blocks for
hand-built families.  The grammar:

    model        := "model" NAME statement*
    statement    := vardecl | edgedecl | cptblock | familyblock | generate
    vardecl      := "var" NAME ":" INT ("labels" NAME+)?
    edgedecl     := "edge" NAME "->" NAME
    cptblock     := "cpt" NAME ("|" NAME+)? "{" row+ "}"
    row          := "(" bindings? ")" ":" REAL+
    familyblock  := "belief" "do" "(" bindings? ")" "{" cell+ "}"
    cell         := "(" bindings? ")" ":" REAL
    generate     := "generate" ":" "markov"
    bindings     := NAME "=" (INT | NAME) ("," ...)*

``#`` starts a comment.  Every diagnostic carries a line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
import numpy as np

from .errors import CycleError, ParseError
from .graph import Dag
from .space import Policy, VariableSpace, iter_policies

RESERVED = {"model", "var", "edge", "cpt", "belief", "do", "labels", "generate", "markov"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<real>\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[:|{}(),=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str) -> list:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        else:
            if kind == "sym":
                kind = value
            tokens.append(Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class VarDecl:
    name: str
    card: int
    labels: tuple | None
    token: Token


@dataclass
class CptBlock:
    var: str
    parents: tuple
    rows: list  # [(bindings, values, token)]
    token: Token


@dataclass
class BeliefBlock:
    do_bindings: list  # [(name, raw_value, token)]
    cells: list  # [(bindings, value, token)]
    token: Token


@dataclass
class ModelFile:
    name: str
    variables: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # [(tail, head, token)]
    cpts: list = field(default_factory=list)
    beliefs: list = field(default_factory=list)
    generate_markov: bool = False


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, expected=()):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col, expected)

    def expect(self, kind, expected_text=None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail("unexpected %r" % (tok.value or "end of input"), (expected_text or kind,))
        return self.next()

    def keyword(self, word) -> Token:
        tok = self.peek()
        if tok.kind != "name" or tok.value != word:
            self.fail("unexpected %r" % (tok.value or "end of input"), (word,))
        return self.next()

    def parse_model(self) -> ModelFile:
        self.keyword("model")
        name = self.expect("name", "model name").value
        model = ModelFile(name)
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "name":
                self.fail("unexpected %r" % tok.value, ("var", "edge", "cpt", "belief", "generate"))
            if tok.value == "var":
                model.variables.append(self.parse_var())
            elif tok.value == "edge":
                model.edges.append(self.parse_edge())
            elif tok.value == "cpt":
                model.cpts.append(self.parse_cpt())
            elif tok.value == "belief":
                model.beliefs.append(self.parse_belief())
            elif tok.value == "generate":
                self.next()
                self.expect(":", ":")
                self.keyword("markov")
                model.generate_markov = True
            else:
                self.fail("unexpected %r" % tok.value, ("var", "edge", "cpt", "belief", "generate"))
        return model

    def parse_var(self) -> VarDecl:
        self.keyword("var")
        name_tok = self.expect("name", "variable name")
        if name_tok.value in RESERVED:
            raise ParseError("%r is a reserved word" % name_tok.value, name_tok.line, name_tok.col)
        self.expect(":", ":")
        card_tok = self.expect("int", "cardinality")
        labels = None
        if self.peek().kind == "name" and self.peek().value == "labels":
            self.next()
            collected = []
            while self.peek().kind == "name" and self.peek().value not in RESERVED:
                collected.append(self.next().value)
            if not collected:
                self.fail("expected at least one label", ("label",))
            labels = tuple(collected)
        return VarDecl(name_tok.value, int(card_tok.value), labels, name_tok)

    def parse_edge(self):
        self.keyword("edge")
        tail = self.expect("name", "variable name")
        self.expect("arrow", "->")
        head = self.expect("name", "variable name")
        return (tail.value, head.value, tail)

    def parse_bindings(self) -> list:
        out = []
        if self.peek().kind == ")":
            return out
        while True:
            name_tok = self.expect("name", "variable name")
            self.expect("=", "=")
            val_tok = self.peek()
            if val_tok.kind not in ("int", "name"):
                self.fail("expected a value index or label", ("value",))
            self.next()
            out.append((name_tok.value, val_tok.value, name_tok))
            if self.peek().kind == ",":
                self.next()
                continue
            return out

    def parse_cpt(self) -> CptBlock:
        self.keyword("cpt")
        var_tok = self.expect("name", "variable name")
        parents = []
        if self.peek().kind == "|":
            self.next()
            while self.peek().kind == "name":
                parents.append(self.next().value)
            if not parents:
                self.fail("expected parent names after '|'", ("parent name",))
        self.expect("{", "{")
        rows = []
        while self.peek().kind != "}":
            row_tok = self.expect("(", "(")
            bindings = self.parse_bindings()
            self.expect(")", ")")
            self.expect(":", ":")
            values = []
            while self.peek().kind in ("real", "int"):
                values.append(float(self.next().value))
            if not values:
                self.fail("expected probabilities after ':'", ("number",))
            rows.append((bindings, values, row_tok))
        self.expect("}", "}")
        return CptBlock(var_tok.value, tuple(parents), rows, var_tok)

    def parse_belief(self) -> BeliefBlock:
        head = self.keyword("belief")
        self.keyword("do")
        self.expect("(", "(")
        do_bindings = self.parse_bindings()
        self.expect(")", ")")
        self.expect("{", "{")
        cells = []
        while self.peek().kind != "}":
            cell_tok = self.expect("(", "(")
            bindings = self.parse_bindings()
            self.expect(")", ")")
            self.expect(":", ":")
            val_tok = self.peek()
            if val_tok.kind not in ("real", "int"):
                self.fail("expected a probability", ("number",))
            self.next()
            cells.append((bindings, float(val_tok.value), cell_tok))
        self.expect("}", "}")
        return BeliefBlock(do_bindings, cells, head)


def parse_model(text: str) -> ModelFile:
    return _Parser(tokenize(text)).parse_model()


@dataclass
class BuiltModel:
    """A semantically validated model, ready for the engine."""

    name: str
    space: VariableSpace
    graph: Dag
    labels: dict  # var -> tuple of labels, only for labeled variables
    cpts: dict | None  # var -> ndarray, None when the file has no CPT blocks
    belief_tables: dict  # Policy -> ndarray over the policy's free grid
    generate_markov: bool

    def resolve_value(self, var: str, raw: str, token: Token | None = None) -> int:
        labels = self.labels.get(var)
        if raw.isdigit():
            value = int(raw)
        elif labels and raw in labels:
            value = labels.index(raw)
        else:
            where = (token.line, token.col) if token else (0, 0)
            raise ParseError("unknown value %r for variable %r" % (raw, var), *where)
        if not 0 <= value < self.space.card(var):
            where = (token.line, token.col) if token else (0, 0)
            raise ParseError(
                "value %d out of range for variable %r" % (value, var), *where
            )
        return value


def _semantic(message: str, token: Token) -> ParseError:
    return ParseError(message, token.line, token.col)


def build_model(model: ModelFile) -> BuiltModel:
    """Semantic validation; raises :class:`ParseError` with positions."""
    if not model.variables:
        raise ParseError("model declares no variables", 1, 1)
    names, cards, labels = [], [], {}
    for decl in model.variables:
        if decl.name in names:
            raise _semantic("variable %r declared twice" % decl.name, decl.token)
        if decl.card < 2:
            raise _semantic("variable %r needs cardinality >= 2" % decl.name, decl.token)
        if decl.labels is not None:
            if len(decl.labels) != decl.card:
                raise _semantic(
                    "variable %r has %d labels for %d values"
                    % (decl.name, len(decl.labels), decl.card),
                    decl.token,
                )
            labels[decl.name] = decl.labels
        names.append(decl.name)
        cards.append(decl.card)
    space = VariableSpace(names, cards)

    edge_pairs = []
    for tail, head, token in model.edges:
        for v in (tail, head):
            if v not in space:
                raise _semantic("edge references undeclared variable %r" % v, token)
        if (tail, head) in edge_pairs:
            raise _semantic("duplicate edge %s -> %s" % (tail, head), token)
        edge_pairs.append((tail, head))
    try:
        graph = Dag(space.names, edge_pairs)
    except CycleError as err:
        token = model.edges[0][2]
        raise _semantic("declared edges form a cycle: %s" % " -> ".join(err.cycle), token) from None

    built = BuiltModel(model.name, space, graph, labels, None, {}, model.generate_markov)

    if model.cpts:
        cpts = {}
        for block in model.cpts:
            if block.var not in space:
                raise _semantic("cpt for undeclared variable %r" % block.var, block.token)
            if block.var in cpts:
                raise _semantic("duplicate cpt block for %r" % block.var, block.token)
            declared_parents = space.canonical(graph.parents(block.var))
            given_parents = tuple(block.parents)
            for p in given_parents:
                if p not in space:
                    raise _semantic("cpt parent %r is undeclared" % p, block.token)
            if set(given_parents) != set(declared_parents):
                raise _semantic(
                    "cpt for %r conditions on %r but the declared edges give parents %r"
                    % (block.var, list(given_parents), list(declared_parents)),
                    block.token,
                )
            shape = tuple(space.card(p) for p in declared_parents) + (space.card(block.var),)
            arr = np.full(shape, np.nan)
            for bindings, values, token in block.rows:
                bound = {}
                for name, raw, btok in bindings:
                    if name not in declared_parents:
                        raise _semantic(
                            "row binds %r, not a parent of %r" % (name, block.var), btok
                        )
                    if name in bound:
                        raise _semantic("row binds %r twice" % name, btok)
                    bound[name] = built.resolve_value(name, raw, btok)
                if set(bound) != set(declared_parents):
                    missing = sorted(set(declared_parents) - set(bound))
                    raise _semantic(
                        "row for %r misses parent binding(s) %r" % (block.var, missing), token
                    )
                if len(values) != space.card(block.var):
                    raise _semantic(
                        "row for %r lists %d probabilities; cardinality is %d"
                        % (block.var, len(values), space.card(block.var)),
                        token,
                    )
                total = sum(values)
                if abs(total - 1.0) > 1e-9:
                    raise _semantic(
                        "row for %r sums to %.12g, expected 1" % (block.var, total), token
                    )
                key = tuple(bound[p] for p in declared_parents)
                if not np.any(np.isnan(arr[key])):
                    raise _semantic("duplicate row for %r" % (block.var,), token)
                # file tolerance is 1e-9; the engine wants exact rows
                arr[key] = np.asarray(values) / total
            if np.any(np.isnan(arr)):
                raise _semantic(
                    "cpt for %r does not cover every parent context" % block.var, block.token
                )
            cpts[block.var] = arr
        missing = [n for n in space.names if n not in cpts]
        if missing:
            raise _semantic(
                "cpt blocks present but variable(s) %r have none" % (missing,),
                model.cpts[0].token,
            )
        built.cpts = cpts

    for block in model.beliefs:
        bound = {}
        for name, raw, token in block.do_bindings:
            if name not in space:
                raise _semantic("belief block intervenes undeclared %r" % name, token)
            if name in bound:
                raise _semantic("belief block binds %r twice" % name, token)
            bound[name] = built.resolve_value(name, raw, token)
        policy = Policy(space, bound)
        if policy in built.belief_tables:
            raise _semantic("duplicate belief block for %r" % (policy,), block.token)
        free = policy.unintervened()
        shape = tuple(space.card(n) for n in free)
        arr = np.full(shape if shape else (1,), np.nan)
        for bindings, value, token in block.cells:
            cell = {}
            for name, raw, btok in bindings:
                if name not in free:
                    raise _semantic(
                        "belief cell binds %r, which is intervened or unknown" % name, btok
                    )
                cell[name] = built.resolve_value(name, raw, btok)
            if set(cell) != set(free):
                raise _semantic("belief cell must bind all free variables %r" % (list(free),), token)
            key = tuple(cell[n] for n in free)
            if not np.isnan(arr[key if shape else 0]):
                raise _semantic("duplicate belief cell", token)
            arr[key if shape else 0] = value
        if np.any(np.isnan(arr)):
            raise _semantic("belief block does not cover the outcome grid", block.token)
        total = float(arr.sum())
        if abs(total - 1.0) > 1e-9:
            raise _semantic("belief block sums to %.12g, expected 1" % total, block.token)
        built.belief_tables[policy] = arr.reshape(shape) / total

    if built.belief_tables and not model.generate_markov:
        covered = set(built.belief_tables)
        missing = [p for p in iter_policies(space) if p not in covered]
        if missing:
            raise _semantic(
                "belief blocks cover %d policies but %d are missing (e.g. %r); "
                "declare 'generate: markov' with cpts to fill the rest"
                % (len(covered), len(missing), missing[0]),
                model.beliefs[0].token,
            )
    if model.generate_markov and built.cpts is None:
        raise _semantic("'generate: markov' needs cpt blocks for every variable", Token("name", "generate", 1, 1))

    return built


def materialize(built: BuiltModel, seed: int = 0):
    """Turn a validated model into engine objects.

    Returns ``(markov, family)`` where ``markov`` is the structural model
    (None for purely explicit families) and ``family`` is the belief
    family.  Structure-only files (no cpts, no belief blocks) get a random
    live parameterization from ``seed``.  Support violations are left for
    the assumption checker to report, not raised here.
    """
    from .dist import JointTable
    from .docalc import MarkovModel, family_from_markov, random_markov_model

    space = built.space
    explicit = {
        policy: JointTable(space, policy.unintervened(), arr)
        for policy, arr in built.belief_tables.items()
    }

    if explicit and not built.generate_markov:
        from .beliefs import BeliefFamily

        return None, BeliefFamily.from_tables(space, explicit)

    if built.cpts is not None:
        markov = MarkovModel(space, built.graph, built.cpts)
    else:
        markov = random_markov_model(built.graph, space, seed=seed)
    family = family_from_markov(markov, require_full_support=False)
    for policy, table in explicit.items():
        family = family.with_table(policy, table)
    return markov, family


def load_model(path) -> BuiltModel:
    with open(path, "r", encoding="utf-8") as fh:
        return build_model(parse_model(fh.read()))


def serialize_model(model: ModelFile) -> str:
    """Canonical text form; parsing it back yields an equivalent model."""
    lines = ["model %s" % model.name, ""]
    for decl in model.variables:
        line = "var %s : %d" % (decl.name, decl.card)
        if decl.labels:
            line += " labels %s" % " ".join(decl.labels)
        lines.append(line)
    if model.edges:
        lines.append("")
        for tail, head, _ in model.edges:
            lines.append("edge %s -> %s" % (tail, head))
    for block in model.cpts:
        lines.append("")
        head = "cpt %s" % block.var
        if block.parents:
            head += " | %s" % " ".join(block.parents)
        lines.append(head + " {")
        for bindings, values, _ in block.rows:
            binding_text = ", ".join("%s=%s" % (n, v) for n, v, _ in bindings)
            value_text = " ".join("%.17g" % v for v in values)
            lines.append("  (%s): %s" % (binding_text, value_text))
        lines.append("}")
    for block in model.beliefs:
        lines.append("")
        binding_text = ", ".join("%s=%s" % (n, v) for n, v, _ in block.do_bindings)
        lines.append("belief do (%s) {" % binding_text)
        for bindings, value, _ in block.cells:
            cell_text = ", ".join("%s=%s" % (n, v) for n, v, _ in bindings)
            lines.append("  (%s): %.17g" % (cell_text, value))
        lines.append("}")
    if model.generate_markov:
        lines.append("")
        lines.append("generate : markov")
    return "\n".join(lines) + "\n"
