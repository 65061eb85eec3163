"""Figure rendering for CLI reports. Figures are written to files, never shown."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden_mean = (5**0.5 - 1) / 2
fig_width = 3.4
params = {
    "axes.labelsize": 9,
    "font.size": 8,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 200,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "svg.hashsalt": "mpqkd",
}


def _figure():
    return plt.subplots(constrained_layout=True)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_guessing(rows: Sequence[dict], path: str | Path, ensemble: str = "s2") -> Path:
    """Guessing probability vs Y-flip strength, with and without protection."""
    with plt.rc_context(params):
        fig, ax = _figure()
        p = [r["p"] for r in rows]
        ax.plot(p, [r["pguess_std"] for r in rows], "-", color="C0", label="standard")
        ax.plot(p, [r["pguess_mp"] for r in rows], "-", color="C3", label="protected")
        ax.plot(p, [r["pguess_oracle_std"] for r in rows], "o", mfc="none", color="C0", label="oracle (standard)")
        ax.plot(p, [r["pguess_oracle_mp"] for r in rows], "s", mfc="none", color="C3", label="oracle (protected)")
        ax.set_xlabel("p")
        ax.set_ylabel(r"$p_\mathrm{guess}$")
        ax.set_title({"s2": r"$\{|0\rangle, |1\rangle\}$", "s0plus": r"$\{|0\rangle, |+\rangle\}$"}.get(ensemble, ensemble))
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_qber_sweep(rows: Sequence[dict], path: str | Path) -> Path:
    """QBER vs channel loss, one line per (p, protection)."""
    with plt.rc_context(params):
        fig, ax = _figure()
        groups: dict[tuple, list[dict]] = {}
        for r in rows:
            groups.setdefault((r["p"], r["protected"]), []).append(r)
        for i, ((p, prot), rs) in enumerate(sorted(groups.items())):
            rs = sorted(rs, key=lambda r: r["loss_db"])
            loss = [r["loss_db"] for r in rs]
            color = f"C{i}"
            label = f"p={p:g} " + ("MP" if prot else "std")
            ax.plot(loss, [r["qber_analytic"] for r in rs], "-" if prot else "--", color=color, label=label)
            ax.errorbar(loss, [r["qber_mc"] for r in rs], yerr=[2 * r["stderr"] for r in rs], fmt="o", color=color, mfc="none")
        ax.set_xlabel("channel loss (dB)")
        ax.set_ylabel("QBER")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_thresholds(rows: Sequence[dict], path: str | Path) -> Path:
    """Horizontal bars of the critical QBERs, stored vs recomputed."""
    with plt.rc_context(params):
        fig, ax = _figure()
        fig.set_size_inches(fig_width, fig_width * 0.9)
        names = [r["name"] for r in rows]
        y = range(len(rows))
        ax.barh(y, [r["stored"] for r in rows], color="0.8", label="stored")
        rec = [(i, r["recomputed"]) for i, r in zip(y, rows) if r["recomputed"] == r["recomputed"]]
        ax.plot([v for _, v in rec], [i for i, _ in rec], "k|", markersize=8, label="recomputed")
        ax.set_yticks(list(y), names)
        ax.invert_yaxis()
        ax.set_xlabel("critical QBER")
        ax.legend(frameon=False, loc="lower right")
        return _save(fig, path)
