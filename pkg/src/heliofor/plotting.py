"""Static SVG figures.

Matplotlib's SVG backend is made reproducible by fixing the id hash salt and
dropping the creation date, so the same data always yields the same bytes.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {"svg.hashsalt": "heliofor", "svg.fonttype": "none", "figure.figsize": (9, 4)}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _hours(timestamps):
    ts = np.asarray(timestamps, dtype=np.int64)
    return (ts - ts[0]) / 3600.0 if ts.size else ts.astype(float)


def forecast_plot(path, timestamps, predicted, actual=None, title="Forecast"):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        t = _hours(timestamps)
        if actual is not None:
            ax.plot(t, actual, color="0.3", lw=1.0, label="actual")
        ax.plot(t, predicted, color="tab:orange", lw=1.0, label="predicted")
        ax.set_xlabel("hours from first step")
        ax.set_ylabel("PV power (W)")
        ax.set_title(title)
        ax.legend(loc="upper right")
        _save(fig, path)


def overlay_plot(path, timestamps, actual, series, max_points=2016, title="Model comparison"):
    """Actual power with every model's prediction; only the last ``max_points`` steps."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        sl = slice(max(0, len(timestamps) - max_points), None)
        t = _hours(np.asarray(timestamps)[sl])
        ax.plot(t, np.asarray(actual)[sl], color="black", lw=1.2, label="actual")
        for name, pred in series:
            ax.plot(t, np.asarray(pred)[sl], lw=0.8, label=name)
        ax.set_xlabel("hours from first plotted step")
        ax.set_ylabel("PV power (W)")
        ax.set_title(title)
        ax.legend(loc="upper right", fontsize="small")
        _save(fig, path)


def importance_plot(path, ranking, title="Relative feature importance"):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        names = [n for n, _ in ranking]
        values = [v for _, v in ranking]
        ax.barh(names[::-1], values[::-1], color="tab:blue")
        ax.set_xlabel("share of |standardised coefficient|")
        ax.set_title(title)
        _save(fig, path)
