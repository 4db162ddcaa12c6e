"""Report figures rendered to files (no display needed)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    "svg.hashsalt": "counterarg",
}


def _save(fig, path):
    # fixed metadata keeps repeated renders byte-identical
    meta = {"Software": None} if str(path).endswith(".png") else {"Date": None}
    fig.savefig(path, bbox_inches="tight", metadata=meta)
    plt.close(fig)


def plot_distinct(distinct, path, label="system"):
    """Bar chart of mean distinct n-grams per argument for each n."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ns = sorted(distinct, key=int)
        ax.bar([f"{n}-gram" for n in ns], [distinct[n] for n in ns], color="#4c72b0", label=label)
        ax.set_ylabel("distinct n-grams per argument")
        ax.legend(frameon=False)
        _save(fig, path)


def plot_uncommon(fractions, path, label="system"):
    """Share of tokens outside the top-K training words, per K."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ks = sorted(fractions, key=int)
        ax.plot([int(k) for k in ks], [100 * fractions[k] for k in ks], marker="o", color="#dd8452", label=label)
        ax.set_xlabel("K (most frequent training words)")
        ax.set_ylabel("% tokens outside top-K")
        ax.set_ylim(bottom=0)
        ax.legend(frameon=False)
        _save(fig, path)
