"""Result tables (markdown, csv, json) and optional figures.

Benchmark tables have one row per sampling method,
metrics as percentages with two decimals, times as per-fold means in
seconds with millisecond resolution. Every format is rendered from the same
formatted strings, so values agree across files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .harness import CLASSIFIER_NAMES, ExperimentRecord, TimingRow, project_time
from .samplers import DISPLAY_NAMES

METRIC_COLUMNS = ("AvAvg", "AvFb", "MAvG", "CBA")
TIME_COLUMNS = ("Sampling Time (s)", "Classifier Time (s)", "Total Time (s)")
TABLE_COLUMNS = ("Sampling Method",) + METRIC_COLUMNS + TIME_COLUMNS
FORMATS = ("csv", "json", "markdown")

# metric report keys behind the table headers
_REPORT_KEYS = {"AvAvg": "AvAcc", "AvFb": "AvFb", "MAvG": "MAvG", "CBA": "CBA"}


@dataclass(frozen=True)
class ResultTable:
    dataset: str
    classifier: str
    rows: tuple[tuple[str, ...], ...]
    samplers: tuple[str, ...]

    @property
    def title(self) -> str:
        return f"{CLASSIFIER_NAMES.get(self.classifier, self.classifier)} - {self.dataset}"


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def _sec(x: float) -> str:
    return f"{x:.3f}"


def benchmark_tables(records: Iterable[ExperimentRecord]) -> list[ResultTable]:
    """Average fold records into one table per (dataset, classifier)."""
    groups: dict[tuple[str, str], dict[str, list[ExperimentRecord]]] = defaultdict(
        lambda: defaultdict(list))
    for r in records:
        groups[(r.dataset, r.classifier)][r.sampler].append(r)
    tables = []
    for (dataset, clf), by_sampler in groups.items():
        rows = []
        for sampler, recs in by_sampler.items():
            metrics = [sum(r.report.as_dict()[_REPORT_KEYS[m]] for r in recs) / len(recs)
                       for m in METRIC_COLUMNS]
            samp = sum(r.sampling_time for r in recs) / len(recs)
            cls = sum(r.classifier_time for r in recs) / len(recs)
            name = DISPLAY_NAMES.get(sampler, sampler)
            rows.append((sampler, (name, *map(_pct, metrics), _sec(samp), _sec(cls),
                                   _sec(samp + cls))))
        rows.sort(key=lambda r: r[1][0].lower())
        tables.append(ResultTable(dataset, clf, tuple(r[1] for r in rows),
                                  tuple(r[0] for r in rows)))
    return tables


def table_markdown(table: ResultTable) -> str:
    lines = [f"### {table.title}", "",
             "| " + " | ".join(TABLE_COLUMNS) + " |",
             "|" + "|".join(["---"] + ["---:"] * (len(TABLE_COLUMNS) - 1)) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in table.rows]
    lines += ["", "Times are per-fold means in seconds."]
    return "\n".join(lines) + "\n"


def tables_csv(tables: Sequence[ResultTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("Dataset", "Classifier") + TABLE_COLUMNS)
    for t in tables:
        for row in t.rows:
            w.writerow((t.dataset, t.classifier) + row)
    return buf.getvalue()


def tables_json(tables: Sequence[ResultTable]) -> str:
    out = [{"dataset": t.dataset, "classifier": t.classifier,
            "rows": [dict(zip(TABLE_COLUMNS, row)) for row in t.rows]} for t in tables]
    return json.dumps(out, indent=2) + "\n"


def folds_csv(records: Iterable[ExperimentRecord]) -> str:
    """Long format: one line per fold with unrounded values."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("dataset", "classifier", "sampler", "fold", "AvAcc", "AvFb", "MAvG", "CBA",
                "sampling_time", "classifier_time", "total_time", "n_train", "n_synthetic"))
    for r in records:
        m = r.report.as_dict()
        w.writerow((r.dataset, r.classifier, r.sampler, r.fold,
                    *(repr(m[k]) for k in ("AvAcc", "AvFb", "MAvG", "CBA")),
                    f"{r.sampling_time:.6f}", f"{r.classifier_time:.6f}",
                    f"{r.total_time:.6f}", r.n_train, r.n_synthetic))
    return buf.getvalue()


def timing_csv(rows: Sequence[TimingRow]) -> str:
    """Long format (sampler, size, seconds) plus a log10 column for plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("sampler", "size", "seconds", "log10_seconds"))
    for r in rows:
        w.writerow((r.sampler, r.size, f"{r.seconds:.6f}",
                    f"{math.log10(max(r.seconds, 1e-9)):.6f}"))
    return buf.getvalue()


def projection_rows(rows: Sequence[TimingRow], target_size: int) -> list[tuple[str, str]]:
    samplers = list(dict.fromkeys(r.sampler for r in rows))
    return [(s, f"{project_time(rows, s, target_size):.3f}") for s in samplers]


def projection_csv(rows: Sequence[TimingRow], target_size: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("sampler", "target_size", "projected_seconds"))
    for s, v in projection_rows(rows, target_size):
        w.writerow((s, target_size, v))
    return buf.getvalue()


def timing_markdown(rows: Sequence[TimingRow], target_size: int) -> str:
    sizes = sorted({r.size for r in rows})
    samplers = list(dict.fromkeys(r.sampler for r in rows))
    cell = {(r.sampler, r.size): f"{r.seconds:.3f}" for r in rows}
    proj = dict(projection_rows(rows, target_size))
    head = ["Sampling Method"] + [f"{s} rows" for s in sizes] + [f"Projected {target_size}"]
    lines = ["### Sampling times (s)", "", "| " + " | ".join(head) + " |",
             "|" + "|".join(["---"] + ["---:"] * (len(head) - 1)) + "|"]
    for s in samplers:
        vals = [cell.get((s, z), "") for z in sizes] + [proj[s]]
        lines.append("| " + " | ".join([DISPLAY_NAMES.get(s, s)] + vals) + " |")
    lines += ["", "Median of repeated runs on the training split of a stratified subset."]
    return "\n".join(lines) + "\n"


# -- figures ------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def benchmark_figure(table: ResultTable, path: Path) -> Path:
    """Grouped bars of the four metrics per sampling method."""
    plt = _pyplot()
    names = [row[0] for row in table.rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(names) + 2), 4.0))
    width = 0.8 / len(METRIC_COLUMNS)
    for j, metric in enumerate(METRIC_COLUMNS):
        vals = [float(row[1 + j]) for row in table.rows]
        ax.bar([i + j * width for i in range(len(names))], vals, width, label=metric)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(names))])
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("score (%)")
    ax.set_ylim(0, 100)
    ax.set_title(table.title)
    ax.legend(ncol=4, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def timing_figure(rows: Sequence[TimingRow], path: Path) -> Path:
    """Sampling time against subset size on a log time axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for s in dict.fromkeys(r.sampler for r in rows):
        pts = sorted((r.size, r.seconds) for r in rows if r.sampler == s)
        ax.plot([p[0] for p in pts], [max(p[1], 1e-6) for p in pts], marker="o",
                label=DISPLAY_NAMES.get(s, s))
    ax.set_yscale("log")
    ax.set_xlabel("rows")
    ax.set_ylabel("sampling time (s)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
