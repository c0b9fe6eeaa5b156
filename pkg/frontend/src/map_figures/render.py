"""Deterministic figure saving (pixel-identical reruns)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# A fixed style keeps renders a pure function of (data, job).
matplotlib.rcParams.update({
    "figure.dpi": 100,
    "font.family": "DejaVu Sans",
    "svg.hashsalt": "map-figures",
})


def save_figure(fig, job) -> str:
    """Save without volatile metadata (timestamps, software stamps)."""
    suffix = job.out.rsplit(".", 1)[-1].lower()
    if suffix == "png":
        metadata = {"Software": None}
    elif suffix == "svg":
        metadata = {"Date": None}
    else:
        raise ValueError(f"unsupported image format {suffix!r} (use png or svg)")
    fig.savefig(job.out, dpi=job.dpi, bbox_inches="tight", metadata=metadata)
    plt.close(fig)
    return job.out
