"""Histogram and scatter plot data as tab-separated text plus SVG renderings."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, _class_index, _feature_index
from .errors import ParameterError
from .fragstore import atomic_write

SCHEMA_PREFIX = "# fragkit-plot"


@dataclass
class PlotData:
    kind: str  # histogram | scatter2d | scatter3d
    axis_labels: list
    series: list = field(default_factory=list)  # (name, values or points)
    edges: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "histogram":
            if self.edges is None or len(self.edges) < 2:
                raise ParameterError("a histogram needs at least one bin")
        elif self.kind not in ("scatter2d", "scatter3d"):
            raise ParameterError(f"unknown plot kind {self.kind!r}")

    def to_text(self) -> str:
        out = io.StringIO()
        if self.kind == "histogram":
            out.write(f"{SCHEMA_PREFIX} histogram feature={self.axis_labels[0]} bins={len(self.edges) - 1} "
                      "columns=series,bin_low,bin_high,count\n")
            for name, counts in self.series:
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], counts):
                    out.write(f"{name}\t{float(lo)!r}\t{float(hi)!r}\t{int(c)}\n")
        else:
            cols = ",".join(["series"] + list(self.axis_labels))
            out.write(f"{SCHEMA_PREFIX} {self.kind} columns={cols}\n")
            for name, pts in self.series:
                for p in pts:
                    out.write(name + "".join(f"\t{float(v)!r}" for v in p) + "\n")
        return out.getvalue()

    def render_svg(self) -> bytes:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig = plt.figure(figsize=(6, 4.5))
        if self.kind == "histogram":
            ax = fig.add_subplot(111)
            widths = np.diff(self.edges)
            for name, counts in self.series:
                ax.bar(self.edges[:-1], counts, width=widths, align="edge", alpha=0.5, label=name)
            ax.set_xlabel(self.axis_labels[0])
            ax.set_ylabel("count")
        elif self.kind == "scatter2d":
            ax = fig.add_subplot(111)
            for name, pts in self.series:
                pts = np.asarray(pts).reshape(-1, 2)
                ax.scatter(pts[:, 0], pts[:, 1], s=6, label=name)
            ax.set_xlabel(self.axis_labels[0])
            ax.set_ylabel(self.axis_labels[1])
        else:
            ax = fig.add_subplot(111, projection="3d")
            for name, pts in self.series:
                pts = np.asarray(pts).reshape(-1, 3)
                ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=6, label=name)
            ax.set_xlabel(self.axis_labels[0])
            ax.set_ylabel(self.axis_labels[1])
            ax.set_zlabel(self.axis_labels[2])
        ax.legend()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg")
        plt.close(fig)
        return buf.getvalue()

    def write(self, stem):
        """Write ``<stem>.tsv`` and ``<stem>.svg``; returns both paths."""
        stem = Path(stem)
        tsv, svg = stem.with_suffix(".tsv"), stem.with_suffix(".svg")
        atomic_write(tsv, self.to_text().encode("utf-8"))
        atomic_write(svg, self.render_svg())
        return tsv, svg


def _names_error(kind, bad, valid):
    return ParameterError(f"unknown {kind} {bad!r}; valid names: {', '.join(valid)}")


def _class_indices(ds, classes):
    if classes is None:
        return list(range(ds.n_classes))
    out = []
    for c in classes:
        try:
            out.append(_class_index(ds, c))
        except ParameterError:
            raise _names_error("class", c, ds.class_names) from None
    if not out:
        raise ParameterError("no classes selected")
    return out


def _feature(ds, f):
    try:
        return _feature_index(ds, f)
    except ParameterError:
        raise _names_error("feature", f, ds.descriptors) from None


def emit_histogram(ds: Dataset, features, classes=None, bins=20) -> list:
    """One PlotData per feature; every class shares the feature's min-max bins."""
    if bins < 1:
        raise ParameterError("bin count must be >= 1")
    if not features:
        raise ParameterError("no features selected")
    cls = _class_indices(ds, classes)
    rows = np.isin(ds.labels, cls)
    plots = []
    for f in features:
        j = _feature(ds, f)
        col = ds.samples[rows, j]
        lo, hi = (float(col.min()), float(col.max())) if col.size else (0.0, 1.0)
        edges = np.histogram_bin_edges(col, bins=bins, range=(lo, hi) if hi > lo else None)
        series = [(ds.class_names[c], np.histogram(ds.samples[ds.labels == c, j], bins=edges)[0]) for c in cls]
        plots.append(PlotData("histogram", [ds.descriptors[j]], series, edges))
    return plots


def emit_scatter(ds: Dataset, features, groups=None) -> PlotData:
    """Points per class group; a group may unite several classes."""
    if len(features) not in (2, 3):
        raise ParameterError(f"a scatter plot takes 2 or 3 features, got {len(features)}")
    cols = [_feature(ds, f) for f in features]
    groups = groups if groups is not None else [[c] for c in ds.class_names]
    if not groups:
        raise ParameterError("no class groups selected")
    series = []
    for g in groups:
        idx = _class_indices(ds, g)
        rows = np.isin(ds.labels, idx)
        name = "+".join(ds.class_names[c] for c in idx)
        series.append((name, ds.samples[np.ix_(rows, cols)]))
    return PlotData(f"scatter{len(cols)}d", [ds.descriptors[c] for c in cols], series)
