"""Matplotlib rendering of the experiment reports."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_signal_figure(path, t, beta, y, oracle_estimate, penalized_estimate):
    """Signal, noisy observation and the two recovered estimates."""
    fig, ax = plt.subplots(figsize=(9, 5))
    ax.plot(t, y, color="black", linewidth=0.7, alpha=0.6, label="noisy signal y")
    ax.plot(t, beta, "b--", linewidth=1.6, label="original signal")
    ax.plot(t, oracle_estimate, color="green", linewidth=1.2, label="oracle estimate")
    ax.plot(t, penalized_estimate, color="red", linewidth=1.2, label="penalized estimate")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_risk_figure(path, x, x_label, **series):
    """Per-model curves (exact risk, penalty, mean criterion) on a log scale."""
    fig, ax = plt.subplots(figsize=(9, 5))
    for name, values in series.items():
        ax.plot(x, values, linewidth=1.0, label=name.replace("_", " "))
    ax.set_xlabel(x_label)
    ax.set_yscale("symlog")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
