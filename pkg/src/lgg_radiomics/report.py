"""Human-readable renderings of pipeline reports: text tables, CSV history and figures."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .metrics import ConfusionMatrix, MetricsReport, format_tables


def pca_summary(percent) -> str:
    parts = [f"PC{i + 1}={p:.1f}%" for i, p in enumerate(percent)]
    return ", ".join(parts) + f" (total {sum(percent):.1f}%)"


def _metric_tables(block: dict) -> str:
    cm = ConfusionMatrix(**block["confusion"])
    return format_tables(cm, MetricsReport(**block["rates"]))


def render_text(report: dict) -> str:
    """Plain-text version of a train or evaluate report."""
    out = []
    if report.get("command") == "train":
        split = report["split"]
        smote = report["smote"]
        hist = report["history"]
        out += [
            f"cases: {report['input']['n_cases']}  features: {report['input']['n_features']}  "
            f"classes: {report['input']['class_counts']}",
            f"split: {split['train_cases']} train {split['train_class_counts']} / "
            f"{split['test_cases']} test {split['test_class_counts']}",
            "",
            "explained variance: " + pca_summary(report["pca"]["percent"]),
            "",
            f"SMOTE: +{smote['synthetic_rows']} synthetic rows of class {smote['minority_class']} "
            f"-> {smote['rows']} x {smote['columns']} training matrix {smote['class_counts_after']}",
            "",
            f"{'epochs':>6} {'accuracy start':>15} {'accuracy end':>13} {'loss start':>11} {'loss end':>9}",
            f"{hist['epochs']:>6} {100 * hist['accuracy'][0]:>14.1f}% {100 * hist['accuracy'][-1]:>12.1f}% "
            f"{hist['loss'][0]:>11.4f} {hist['loss'][-1]:>9.4f}",
            f"final training accuracy (full pass): {100 * report['final_training_accuracy']:.1f}%",
            "",
            "test set",
            _metric_tables(report["metrics"]["test"]),
        ]
    else:
        out += [f"cases: {report['metrics']['n_cases']}", "", _metric_tables(report["metrics"])]
    return "\n".join(out) + "\n"


def write_history_csv(report: dict, path) -> None:
    hist = report["history"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for n, (loss, acc) in enumerate(zip(hist["loss"], hist["accuracy"]), start=1):
            w.writerow([n, f"{loss:.17g}", f"{acc:.17g}"])


def _save(fig: Figure, path: Path) -> Path:
    fig.savefig(path, dpi=120, metadata={"Software": None})
    return path


def plot_explained_variance(percent, path) -> Path:
    fig = Figure(figsize=(5, 3.2), tight_layout=True)
    ax = fig.add_subplot()
    x = np.arange(1, len(percent) + 1)
    ax.bar(x, percent, color="0.45")
    ax.plot(x, np.cumsum(percent), marker="o", color="C0", lw=1, label="cumulative")
    ax.set_xticks(x, [f"PC{i}" for i in x])
    ax.set_ylabel("explained variance (%)")
    ax.legend(frameon=False)
    return _save(fig, Path(path))


def plot_history(history: dict, path) -> Path:
    fig = Figure(figsize=(6, 3), tight_layout=True)
    ax1, ax2 = fig.subplots(1, 2)
    epochs = np.arange(1, len(history["loss"]) + 1)
    ax1.plot(epochs, history["loss"], color="C3")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax2.plot(epochs, 100 * np.asarray(history["accuracy"]), color="C0")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy (%)")
    ax2.set_ylim(0, 101)
    return _save(fig, Path(path))


def plot_confusion(confusion: dict, path) -> Path:
    cells = np.array([[confusion["tp"], confusion["fp"]], [confusion["fn"], confusion["tn"]]])
    fig = Figure(figsize=(3.6, 3.2), tight_layout=True)
    ax = fig.add_subplot()
    ax.imshow(cells, cmap="Blues")
    for (r, c), v in np.ndenumerate(cells):
        ax.text(c, r, str(v), ha="center", va="center",
                color="white" if v > cells.max() / 2 else "black")
    ax.set_xticks([0, 1], ["codeleted", "non-codel."])
    ax.set_yticks([0, 1], ["codeleted", "non-codel."])
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    return _save(fig, Path(path))


def render_figures(report: dict, outdir) -> list[Path]:
    """Write PNG figures (and the history CSV for train reports) into *outdir*."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if report.get("command") == "train":
        written.append(plot_explained_variance(report["pca"]["percent"], outdir / "pca_variance.png"))
        written.append(plot_history(report["history"], outdir / "training_history.png"))
        write_history_csv(report, outdir / "training_history.csv")
        written.append(outdir / "training_history.csv")
        written.append(plot_confusion(report["metrics"]["test"]["confusion"], outdir / "confusion_test.png"))
    else:
        written.append(plot_confusion(report["metrics"]["confusion"], outdir / "confusion.png"))
    return written
