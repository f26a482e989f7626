import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracdnn.data import (DataFormatError, Dataset, batch_normalize, cls_label, generate_cls,
                          generate_perfume_standin, load_csv, one_hot, sample_minibatch,
                          save_csv)
from fracdnn.errors import ShapeError


@pytest.mark.parametrize("x, y, label", [(0.3, 0.5, 1), (0.5, 0.3, 0), (0.4, 0.4, 1)])
def test_cls_rule(x, y, label):
    assert cls_label(x, y) == label


def test_generate_cls_labels_follow_level_set():
    ds = generate_cls(500, 3)
    assert ds.n_features == 2 and ds.n_classes == 2
    assert np.all(ds.labels == (ds.Y[0] <= ds.Y[1]))
    assert np.all((ds.Y >= 0) & (ds.Y <= 1))


def test_generate_cls_deterministic_and_balanced():
    a, b = generate_cls(4000, 11), generate_cls(4000, 11)
    assert a.Y.tobytes() == b.Y.tobytes() and a.C.tobytes() == b.C.tobytes()
    frac = a.labels.mean()
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / 4000)


def test_one_hot_integrity():
    C = one_hot([2, 0, 1, 2], 3)
    assert np.all(C.sum(axis=0) == 1)
    assert np.array_equal(C.argmax(axis=0), [2, 0, 1, 2])
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 2)), np.array([[1.0, 1.0], [1.0, 0.0]]))


def test_standin_shape():
    ds = generate_perfume_standin(10, 0)
    assert (ds.n_features, ds.n_classes, ds.n_samples) == (2, 20, 200)
    assert ds.class_names[0].startswith("standin")


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_perfume_like(tmp_path):
    rows = ["x,y,perfume"] + [f"{10 + c},{20 + 2 * c},p{c}" for c in range(20) for _ in range(3)]
    ds = load_csv(_write(tmp_path, "\n".join(rows) + "\n"))
    assert (ds.n_features, ds.n_classes, ds.n_samples) == (2, 20, 60)
    assert ds.class_names[:3] == ["p0", "p1", "p2"]


def test_load_csv_one_per_class(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b,label\n1,2,u\n3,4,v\n5,6,w\n"))
    assert np.array_equal(ds.C, np.eye(3))


def test_load_csv_errors(tmp_path):
    with pytest.raises(DataFormatError, match="line 3"):
        load_csv(_write(tmp_path, "a,b,label\n1,2,u\n3,oops,v\n"))
    with pytest.raises(DataFormatError, match="line 2"):
        load_csv(_write(tmp_path, "a,b,label\n1,2\n"))
    with pytest.raises(DataFormatError, match="empty"):
        load_csv(_write(tmp_path, ""))
    with pytest.raises(DataFormatError, match="no data"):
        load_csv(_write(tmp_path, "a,b,label\n"))


def test_load_csv_schema_and_delimiter(tmp_path):
    p = _write(tmp_path, "t;x;y;cls\n0;1.5;2;a\n1;3;4.25;b\n")
    ds = load_csv(p, feature_columns=["x", "y"], label_column="cls", delimiter=";")
    assert np.array_equal(ds.Y, [[1.5, 3.0], [2.0, 4.25]])


def test_csv_round_trip(tmp_path):
    ds = generate_perfume_standin(3, 5)
    path = tmp_path / "out.csv"
    save_csv(ds, path)
    back = load_csv(path, class_names=ds.class_names)
    assert back.Y.tobytes() == ds.Y.tobytes()
    assert np.array_equal(back.C, ds.C)


def test_batch_normalize_examples():
    assert batch_normalize(np.array([[0.0, 2.0]])) == pytest.approx(np.array([[-1.0, 1.0]]), abs=1e-7)
    assert not np.any(batch_normalize(np.full((1, 5), 3.0)))
    x = np.array([[-1.0, 1.0, -1.0, 1.0]])
    assert np.allclose(batch_normalize(x), x, atol=1e-6)


@given(arrays(float, (3, 12), elements=st.floats(-1e3, 1e3)))
@settings(max_examples=60)
def test_batch_normalize_statistics(Y):
    Z = batch_normalize(Y)
    assert np.all(np.abs(Z.mean(axis=1)) <= 1e-12 * max(1.0, np.abs(Z).max()))
    # eps = 1e-8 shrinks the std by eps/s, below 1e-6 once s >= 0.02
    live = Y.std(axis=1) >= 0.02
    assert np.all(np.abs(Z.std(axis=1)[live] - 1) <= 1e-6)
    assert np.allclose(batch_normalize(Z)[live], Z[live], atol=1e-6)


def test_minibatch_examples():
    ds = generate_cls(10, 0)
    full = sample_minibatch(ds, 1.0, 0, 0)
    assert np.allclose(full.Y, batch_normalize(ds.Y))
    half = sample_minibatch(ds, 0.5, 3, 2)
    assert half.n_samples == 5
    again = sample_minibatch(ds, 0.5, 3, 2)
    assert again.Y.tobytes() == half.Y.tobytes()
    assert sample_minibatch(ds, 0.5, 3, 3).Y.tobytes() != half.Y.tobytes()


def test_minibatch_size_rounds_up():
    ds = generate_cls(7, 0)
    assert sample_minibatch(ds, 0.5, 0, 0).n_samples == 4
    assert sample_minibatch(generate_cls(10, 0), 0.7, 0, 0).n_samples == 7
