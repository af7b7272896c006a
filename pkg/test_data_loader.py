"""
Tests for feature file ingestion and writing.
"""

import json

import numpy as np
import pytest

from data_loader import (load_domain_pair, load_features, remap_labels, save_features,
                         sidecar_path)
from datamodel import LabeledDomain, UnlabeledDomain
from errors import DataFormatError, LabelRangeError, NonFiniteError


def test_csv_with_label_column(tmp_path):
    path = tmp_path / 'source.csv'
    path.write_text("a,b,label\n1.5,2.0,0\n-3.0,4.25,1\n")
    domain = load_features(path)
    assert isinstance(domain, LabeledDomain)
    assert domain.n_features == 2
    assert domain.n_samples == 2
    np.testing.assert_array_equal(domain.features, [[1.5, -3.0], [2.0, 4.25]])
    np.testing.assert_array_equal(domain.labels, [0, 1])


def test_csv_without_labels(tmp_path):
    path = tmp_path / 'target.csv'
    path.write_text("a,b,c\n1,2,3\n")
    domain = load_features(path)
    assert isinstance(domain, UnlabeledDomain)
    assert domain.features.shape == (3, 1)


def test_csv_nan(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text("a,b\n1.0,nan\n")
    with pytest.raises(NonFiniteError):
        load_features(path)


def test_csv_non_numeric(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text("a,b\n1.0,hello\n")
    with pytest.raises(DataFormatError):
        load_features(path)


def test_label_out_of_range(tmp_path):
    path = tmp_path / 'labels.csv'
    path.write_text("a,label\n1.0,0\n2.0,3\n")
    with pytest.raises(LabelRangeError):
        load_features(path, class_count=2)


def test_negative_label(tmp_path):
    path = tmp_path / 'labels.csv'
    path.write_text("a,label\n1.0,-1\n")
    with pytest.raises(LabelRangeError):
        load_features(path)


def test_fractional_label(tmp_path):
    path = tmp_path / 'labels.csv'
    path.write_text("a,label\n1.0,0.5\n")
    with pytest.raises(DataFormatError):
        load_features(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_features(tmp_path / 'nope.csv')


def test_raw_sidecar_mismatch(tmp_path):
    path = tmp_path / 'features.f64'
    path.write_bytes(np.arange(6, dtype='<f8').tobytes())
    sidecar_path(path).write_text(json.dumps({'rows': 4, 'cols': 2}))
    with pytest.raises(DataFormatError):
        load_features(path, fmt='raw')


def test_raw_truncated_value(tmp_path):
    # one whole float64 plus four stray bytes
    path = tmp_path / 'features.f64'
    path.write_bytes(np.ones(1, dtype='<f8').tobytes() + b'\x00\x00\x00\x00')
    sidecar_path(path).write_text(json.dumps({'rows': 1, 'cols': 1, 'labels': [0]}))
    with pytest.raises(DataFormatError):
        load_features(path, fmt='raw')


def test_raw_missing_sidecar(tmp_path):
    path = tmp_path / 'features.f64'
    path.write_bytes(np.zeros(2, dtype='<f8').tobytes())
    with pytest.raises(DataFormatError):
        load_features(path, fmt='raw')


def test_raw_layout(tmp_path):
    path = tmp_path / 'features.f64'
    path.write_bytes(np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], dtype='<f8').tobytes())
    sidecar_path(path).write_text(json.dumps({'rows': 3, 'cols': 2, 'labels': [0, 1, 1]}))
    domain = load_features(path)
    # rows are samples, so feature 0 is 1, 3, 5
    np.testing.assert_array_equal(domain.features, [[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]])
    np.testing.assert_array_equal(domain.labels, [0, 1, 1])


@pytest.mark.parametrize('fmt, name', [('csv', 'x.csv'), ('raw', 'x.f64')])
def test_write_then_load_is_bit_exact(tmp_path, fmt, name):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4, 9)) * 10.0 ** rng.integers(-8, 8, (4, 9))
    X[0, 0] = 0.1
    labels = rng.integers(0, 3, 9)
    save_features(tmp_path / name, X, labels, fmt)
    domain = load_features(tmp_path / name, fmt=fmt)
    assert domain.features.tobytes() == np.asarray(X, dtype=np.float64).tobytes()
    np.testing.assert_array_equal(domain.labels, labels)


def test_save_leaves_no_temp_files(tmp_path):
    save_features(tmp_path / 'x.csv', np.eye(2), [0, 1])
    assert sorted(p.name for p in tmp_path.iterdir()) == ['x.csv']


def test_remap_labels():
    dense, mapping = remap_labels(np.array([10, 30, 10, 20]))
    np.testing.assert_array_equal(dense, [0, 2, 0, 1])
    assert mapping == {0: 10, 1: 20, 2: 30}


def test_load_domain_pair_remaps(tmp_path):
    save_features(tmp_path / 's.csv', np.array([[0.0, 1.0, 2.0, 3.0]]), [5, 5, 9, 9])
    save_features(tmp_path / 't.csv', np.array([[0.5, 2.5]]), [9, 5])
    pair, mapping = load_domain_pair(tmp_path / 's.csv', tmp_path / 't.csv')
    assert mapping == {0: 5, 1: 9}
    assert pair.class_count == 2
    np.testing.assert_array_equal(pair.target.true_labels, [1, 0])
    assert not pair.has_pseudo_labels


def test_load_domain_pair_unknown_target_label(tmp_path):
    save_features(tmp_path / 's.csv', np.array([[0.0, 1.0]]), [0, 1])
    save_features(tmp_path / 't.csv', np.array([[0.5]]), [7])
    with pytest.raises(LabelRangeError):
        load_domain_pair(tmp_path / 's.csv', tmp_path / 't.csv')


def test_load_domain_pair_needs_source_labels(tmp_path):
    save_features(tmp_path / 's.csv', np.array([[0.0, 1.0]]))
    save_features(tmp_path / 't.csv', np.array([[0.5]]))
    with pytest.raises(DataFormatError):
        load_domain_pair(tmp_path / 's.csv', tmp_path / 't.csv')
