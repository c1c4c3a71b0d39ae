"""Figures for the report commands. Rendered headless to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    # Keep PNG/SVG bytes stable between runs.
    "svg.hashsalt": "congruent-eta",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
    return path


def plot_density(report, path, title: str = "count against main term"):
    """Observed count / X and the predicted density, with relative error below."""
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
        xs = [r.X for r in report.rows]
        top.semilogx(xs, [r.observed / r.X for r in report.rows], "o-", label="observed / X")
        top.semilogx(xs, [r.predicted / r.X for r in report.rows], "s--", label="predicted / X")
        top.set_ylabel("density")
        top.set_title(title)
        top.legend()
        bottom.loglog(xs, [r.rel_error for r in report.rows], "o-", color="C3")
        bottom.set_xlabel("X")
        bottom.set_ylabel("relative error")
        return _save(fig, path)


def plot_lemma_e(report, path):
    """Exact counts against X^(1/8 + alpha + theta/2) and the ratio column."""
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
        xs = [r.X for r in report.rows]
        top.loglog(xs, [max(r.count, 0.5) for r in report.rows], "o-", label="count")
        top.loglog(xs, [r.bound for r in report.rows], "--", label="bound")
        top.loglog(xs, [r.bound_eps for r in report.rows], ":", label="bound (eps)")
        top.set_title(f"alpha = {report.alpha:g}, theta = {report.theta:g}")
        top.legend()
        bottom.semilogx(xs, [r.ratio for r in report.rows], "o-", color="C2")
        bottom.set_xlabel("X")
        bottom.set_ylabel("count / bound")
        return _save(fig, path)


def plot_eta_table(rows, path):
    """eta_log / log d for FOUND rows, with the 5/8 and 0.845 reference lines."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        found = [r for r in rows if r.ratio is not None]
        comp = [r for r in found if not r.is_prime]
        prime = [r for r in found if r.is_prime]
        ax.scatter([r.result.d for r in comp], [r.ratio for r in comp], s=12, label="composite d")
        ax.scatter([r.result.d for r in prime], [r.ratio for r in prime], s=12, marker="^", label="prime d")
        for level, style, name in ((5 / 8, "--", "5/8"), (0.845, ":", "0.845"), (1.0, "-.", "1")):
            ax.axhline(level, color="0.4", ls=style, lw=0.8, label=name)
        ax.set_xlabel("d")
        ax.set_ylabel("eta_log / log d")
        if found and max(r.result.d for r in found) > 20:
            ax.set_xscale("log")
        ax.legend()
        return _save(fig, path)


def plot_counts(xs, ys, path, xlabel: str = "X", ylabel: str = "count"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(xs, ys, "o-")
        if xs and min(xs) > 0 and max(xs) / min(xs) > 100:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def figure_path(output, suffix: str = ".png") -> str:
    """Figure file next to an output file: report.csv -> report.png."""
    base = str(output)
    stem = base.rsplit(".", 1)[0] if "." in base.rsplit("/", 1)[-1] else base
    return stem + suffix


__all__ = ["STYLE", "figure_path", "plot_counts", "plot_density", "plot_eta_table", "plot_lemma_e"]
