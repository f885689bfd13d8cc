"""Delimited output and figure rendering for the batch front end.

Every report is a list of row dicts with a fixed column order.  The writers
emit JSON or CSV; when an output directory is given, a matplotlib figure is
rendered next to the delimited file (Betti bar charts for homology tables,
a degree/arity heatmap for dimension tables).
"""

from __future__ import annotations

import csv
import io
import json


def rows_to_json(rows):
    return json.dumps(rows, indent=2, sort_keys=True)


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: _cell(row.get(c)) for c in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def rows_to_text(rows, columns):
    if not rows:
        return "(empty)\n"
    widths = {c: max(len(c), *(len(str(_cell(r.get(c, "")))) for r in rows))
              for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    for r in rows:
        lines.append("  ".join(str(_cell(r.get(c, ""))).ljust(widths[c])
                               for c in columns))
    return "\n".join(lines) + "\n"


def render_homology_figure(rows, path, title):
    """Bar chart of Betti numbers per degree, torsion annotated."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    degrees = [r["degree"] for r in rows]
    betti = [r["betti"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.bar(degrees, betti, color="#355f8d")
    for r in rows:
        tor = r.get("torsion") or []
        if tor:
            ax.annotate("+" + "+".join(f"Z/{t}" for t in tor),
                        (r["degree"], r["betti"]),
                        ha="center", va="bottom", fontsize=8, color="#a03333")
    ax.set_xlabel("degree")
    ax.set_ylabel("Betti number")
    ax.set_title(title)
    ax.set_xticks(degrees)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_dims_figure(rows, path, title):
    """Heatmap of component ranks over (arity, degree)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    arities = sorted({r["arity"] for r in rows})
    degrees = sorted({r["degree"] for r in rows})
    grid = [[0] * len(degrees) for _ in arities]
    for r in rows:
        grid[arities.index(r["arity"])][degrees.index(r["degree"])] = r["rank"]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    im = ax.imshow(grid, aspect="auto", cmap="viridis", origin="lower")
    ax.set_xticks(range(len(degrees)), degrees)
    ax.set_yticks(range(len(arities)), arities)
    ax.set_xlabel("degree")
    ax.set_ylabel("arity")
    ax.set_title(title)
    for i in range(len(arities)):
        for j in range(len(degrees)):
            if grid[i][j]:
                ax.text(j, i, str(grid[i][j]), ha="center", va="center",
                        color="white", fontsize=8)
    fig.colorbar(im, ax=ax, label="rank")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
