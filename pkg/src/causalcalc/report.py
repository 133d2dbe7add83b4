"""Figure-and-CSV reports for a model.

Renders the causal graph and the key distributions as matplotlib figures
next to a delimited summary, so a model check leaves an artifact trail
that can be eyeballed or diffed.  Layouts are deterministic (layered by
topological depth); no randomness enters the drawing.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .axioms import check_assumption1, check_axiom2, check_axiom3, check_axiom4, check_axiom6
from .beliefs import BeliefFamily, causal_graph
from .docalc import QueryExpr
from .errors import CycleError
from .graph import Dag
from .space import Assignment, Policy


def _layered_positions(g: Dag) -> dict:
    depth = {}
    for node in g.topological_order():
        parents = g.parents(node)
        depth[node] = 1 + max((depth[p] for p in parents), default=-1)
    layers = {}
    for node in g.nodes:
        layers.setdefault(depth[node], []).append(node)
    pos = {}
    for d, members in sorted(layers.items()):
        members.sort(key=g.nodes.index)
        for k, node in enumerate(members):
            pos[node] = (k - (len(members) - 1) / 2.0, -d)
    return pos


def draw_graph(g: Dag, path: Path, title: str = "") -> None:
    pos = _layered_positions(g)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for tail, head in sorted(g.edges):
        x0, y0 = pos[tail]
        x1, y1 = pos[head]
        ax.annotate(
            "",
            xy=(x1, y1),
            xytext=(x0, y0),
            arrowprops=dict(arrowstyle="-|>", color="0.25", shrinkA=16, shrinkB=16, lw=1.4),
        )
    for node, (x, y) in pos.items():
        ax.scatter([x], [y], s=900, facecolor="white", edgecolor="0.2", zorder=3)
        ax.text(x, y, node, ha="center", va="center", zorder=4)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    xs = [p[0] for p in pos.values()] or [0]
    ys = [p[1] for p in pos.values()] or [0]
    ax.set_xlim(min(xs) - 0.8, max(xs) + 0.8)
    ax.set_ylim(min(ys) - 0.6, max(ys) + 0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def draw_marginals(fam: BeliefFamily, path: Path, labels: dict | None = None) -> None:
    sp = fam.space
    obs = fam.observational()
    n = len(sp.names)
    fig, axes = plt.subplots(1, n, figsize=(2.4 * n, 2.6), squeeze=False)
    for ax, name in zip(axes[0], sp.names):
        marg = obs.marginal((name,)).probs
        ticks = range(sp.card(name))
        names = (labels or {}).get(name) or [str(v) for v in ticks]
        ax.bar(list(ticks), marg, color="#4878a8")
        ax.set_xticks(list(ticks))
        ax.set_xticklabels(names, fontsize=8)
        ax.set_ylim(0, 1)
        ax.set_title(name, fontsize=10)
    fig.suptitle("observational marginals", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def draw_intervention_contrast(fam: BeliefFamily, query: QueryExpr, path: Path) -> None:
    """Bars of the target-variable distribution under do(...) versus under
    conditioning on the same values, the basic observe/intervene contrast."""
    sp = fam.space
    target_var = query.target.variables[0]
    do = query.intervened
    do_table = fam.table(Policy(sp, do.items)).marginal((target_var,))
    obs = fam.observational()
    try:
        cond_table = obs.conditional((target_var,), Assignment(sp, do.items))
        cond = np.asarray(cond_table.probs)
    except Exception:
        cond = None
    ticks = np.arange(sp.card(target_var))
    width = 0.38
    fig, ax = plt.subplots(figsize=(4.0, 2.8))
    ax.bar(ticks - width / 2, do_table.probs, width, label="do(%s)" % _fmt(do), color="#b85450")
    if cond is not None:
        ax.bar(ticks + width / 2, cond, width, label="given %s" % _fmt(do), color="#4878a8")
    ax.set_xticks(ticks)
    ax.set_xlabel(target_var)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fmt(a: Assignment) -> str:
    return ",".join("%s=%d" % nv for nv in a.items)


def write_report(
    fam: BeliefFamily,
    graph: Dag,
    outdir,
    labels: dict | None = None,
    query: QueryExpr | None = None,
    tol: float = 1e-9,
    max_vars: int = 6,
) -> list:
    """Render figures and a delimited summary into ``outdir``.

    Returns the list of files written.  The CSV carries the axiom
    verdicts, the discovered edges, and the observational marginals; the
    figures show the graph, the marginals, and (when a do-query is given)
    the observe/intervene contrast for its target.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    graph_png = outdir / "graph.png"
    draw_graph(graph, graph_png, title="causal graph")
    written.append(graph_png)

    marg_png = outdir / "marginals.png"
    draw_marginals(fam, marg_png, labels)
    written.append(marg_png)

    if query is not None and len(query.intervened):
        contrast_png = outdir / "intervention.png"
        draw_intervention_contrast(fam, query, contrast_png)
        written.append(contrast_png)

    rows = [("section", "key", "value")]
    try:
        g = causal_graph(fam)
        rows.extend(("edge", "%s->%s" % e, "1") for e in sorted(g.edges))
        reports = [
            check_assumption1(fam, tol),
            check_axiom2(fam, tol),
            check_axiom3(fam, g, max_vars=max_vars),
            check_axiom4(fam, g, tol=tol, max_vars=max_vars),
            check_axiom6(fam, g, tol=tol, max_vars=max_vars),
        ]
        for rep in reports:
            rows.append(("axiom", rep.axiom_id, "pass" if rep.passed else "fail"))
    except CycleError as err:
        rows.append(("axiom", "axiom2", "fail"))
        rows.append(("error", "cycle", " -> ".join(err.cycle)))

    obs = fam.observational()
    for name in fam.space.names:
        for v, p in enumerate(obs.marginal((name,)).probs):
            rows.append(("marginal", "%s=%d" % (name, v), "%.12g" % p))
    if query is not None:
        table = fam.table(Policy(fam.space, query.intervened.items))
        if len(query.observed):
            value = table.conditional(
                query.target.variables, query.observed
            ).probs[query.target.values]
        else:
            value = table.prob(query.target)
        rows.append(("query", "value", "%.12g" % float(value)))

    csv_path = outdir / "summary.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    written.append(csv_path)
    return [str(p) for p in written]
