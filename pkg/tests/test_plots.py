import numpy as np
import pytest

from conftest import make_dataset
from fragkit.errors import ParameterError
from fragkit.plots import PlotData, emit_histogram, emit_scatter


@pytest.fixture
def ds():
    rng = np.random.default_rng(0)
    return make_dataset(rng.normal(size=(30, 3)), [0] * 10 + [1] * 12 + [2] * 8, class_names=["PDF", "TXT", "JPG"],
                        descriptors=["BFD_92", "ASCII", "Mean"])


def test_histogram_counts_per_class(ds):
    (p,) = emit_histogram(ds, ["ASCII"], bins=7)
    assert len(p.series) == 3 and len(p.edges) == 8
    assert [int(c.sum()) for _, c in p.series] == [10, 12, 8]


def test_histogram_of_constant_feature_has_one_bin_filled():
    ds = make_dataset(np.full((6, 1), 3.0), [0, 0, 1, 1, 1, 1])
    (p,) = emit_histogram(ds, [0], bins=5)
    for _, c in p.series:
        assert np.count_nonzero(c) == 1


def test_histogram_two_classes_share_edges(ds):
    (p,) = emit_histogram(ds, ["Mean"], classes=["PDF", "JPG"], bins=4)
    assert [n for n, _ in p.series] == ["PDF", "JPG"]
    text = p.to_text().splitlines()
    assert text[0] == "# fragkit-plot histogram feature=Mean bins=4 columns=series,bin_low,bin_high,count"
    assert len(text) == 1 + 2 * 4


def test_scatter_groups(ds):
    p = emit_scatter(ds, ["BFD_92", "ASCII"], [["PDF"], ["TXT"]])
    assert p.kind == "scatter2d" and [n for n, _ in p.series] == ["PDF", "TXT"]
    assert [len(pts) for _, pts in p.series] == [10, 12]
    united = emit_scatter(ds, [0, 1, 2], [["PDF", "JPG"]])
    assert united.kind == "scatter3d" and united.series[0][0] == "PDF+JPG" and len(united.series[0][1]) == 18


def test_one_sample_per_class_gives_one_point():
    ds = make_dataset([[1.0, 2.0], [3.0, 4.0]], [0, 1])
    p = emit_scatter(ds, ["f0", "f1"])
    assert [pts.tolist() for _, pts in p.series] == [[[1.0, 2.0]], [[3.0, 4.0]]]


def test_plot_errors(ds):
    with pytest.raises(ParameterError, match="PDF, TXT, JPG"):
        emit_histogram(ds, ["ASCII"], classes=["GIF"])
    with pytest.raises(ParameterError, match="BFD_92"):
        emit_scatter(ds, ["ASCII", "nope"])
    with pytest.raises(ParameterError):
        emit_scatter(ds, ["ASCII"])
    with pytest.raises(ParameterError):
        emit_histogram(ds, ["ASCII"], bins=0)
    with pytest.raises(ParameterError):
        emit_histogram(ds, [])
    with pytest.raises(ParameterError):
        PlotData("pie", ["x"])


def test_write_text_and_svg(ds, tmp_path):
    p = emit_scatter(ds, ["BFD_92", "ASCII"])
    tsv, svg = p.write(tmp_path / "s")
    lines = tsv.read_text().splitlines()
    assert lines[0] == "# fragkit-plot scatter2d columns=series,BFD_92,ASCII"
    assert len(lines) == 31
    name, x, y = lines[1].split("\t")
    assert name == "PDF" and float(x) == ds.samples[0, 0] and float(y) == ds.samples[0, 1]
    assert b"<svg" in svg.read_bytes()
