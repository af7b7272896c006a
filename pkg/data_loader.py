import json
import logging
import os
import tempfile
from pathlib import Path
from time import time

import chardet
import numpy as np
import pandas as pd

from datamodel import LabeledDomain, UnlabeledDomain, make_pair
from errors import DataFormatError, LabelRangeError, NonFiniteError

logger = logging.getLogger(__name__)

LABEL_COLUMN = 'label'
FORMATS = ('csv', 'raw')


def detect_encoding(filepath):
    """Detect the encoding of a file."""
    try:
        with open(filepath, 'rb') as f:
            raw_data = f.read(10000)
            result = chardet.detect(raw_data)
            encoding = result['encoding']
            confidence = result['confidence']
            logger.debug(f"Detected encoding: {encoding} with confidence {confidence}")
            return encoding if encoding and confidence > 0.7 else 'utf-8'
    except OSError as e:
        logger.warning(f"Could not detect encoding for {filepath}: {e}. Defaulting to utf-8.")
        return 'utf-8'


def sidecar_path(path):
    """JSON sidecar of a raw feature file: 'features.f64' -> 'features.f64.json'."""
    path = Path(path)
    return path.with_name(path.name + '.json')


def _guess_format(path):
    suffix = Path(path).suffix.lower()
    if suffix == '.csv':
        return 'csv'
    if sidecar_path(path).exists():
        return 'raw'
    raise DataFormatError(f"Cannot tell the format of '{path}'; pass fmt='csv' or fmt='raw'")


def _check_labels(values, path):
    """Integer labels from a column of numbers; non-integers are a format error."""
    values = np.asarray(values)
    if values.size == 0:
        return values.astype(np.int64)
    if not np.issubdtype(values.dtype, np.number) or not np.all(np.isfinite(values)):
        raise DataFormatError(f"Label column in '{path}' must hold finite numbers")
    if not np.all(np.equal(np.mod(values, 1), 0)):
        raise DataFormatError(f"Label column in '{path}' must hold integers")
    return values.astype(np.int64)


def read_csv_features(path):
    """
    Read a CSV feature table: header row, one sample per row, optional 'label' column.

    Returns:
    --------
    tuple
        (l x m feature matrix, labels or None)
    """
    encoding = detect_encoding(path)
    try:
        df = pd.read_csv(path, encoding=encoding, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Malformed CSV '{path}': {e}") from e

    labels = None
    if LABEL_COLUMN in df.columns:
        labels = _check_labels(df[LABEL_COLUMN].to_numpy(), path)
        df = df.drop(columns=[LABEL_COLUMN])
    if df.shape[1] == 0:
        raise DataFormatError(f"CSV '{path}' has no feature columns")

    non_numeric = [c for c in df.columns if not pd.api.types.is_numeric_dtype(df[c])]
    if non_numeric:
        raise DataFormatError(f"Non-numeric feature column(s) in '{path}': {non_numeric}")
    return df.to_numpy(dtype=np.float64).T, labels


def read_raw_features(path):
    """
    Read little-endian float64 samples (row-major, one sample per row) plus the
    JSON sidecar {"rows": samples, "cols": features, "labels": [...]}.
    """
    path = Path(path)
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise DataFormatError(f"Missing sidecar '{meta_path}' for raw file '{path}'")
    try:
        meta = json.loads(meta_path.read_text(encoding='utf-8'))
        rows, cols = int(meta['rows']), int(meta['cols'])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"Malformed sidecar '{meta_path}': {e}") from e

    raw = path.read_bytes()
    if len(raw) % 8:
        raise DataFormatError(f"Raw file '{path}' is {len(raw)} bytes, not a whole number of float64 values")
    data = np.frombuffer(raw, dtype='<f8')
    if data.size != rows * cols:
        raise DataFormatError(
            f"Raw file '{path}' holds {data.size} values, sidecar says {rows} x {cols} = {rows * cols}")

    labels = meta.get('labels')
    if labels is not None:
        labels = _check_labels(labels, meta_path)
        if labels.shape[0] != rows:
            raise DataFormatError(f"Sidecar '{meta_path}' has {labels.shape[0]} labels for {rows} rows")
    return data.reshape(rows, cols).astype(np.float64).T, labels


def read_feature_file(path, fmt=None):
    """Features (l x m) and raw labels (or None) from a CSV or raw-f64 file."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Feature file not found: {path}")
    fmt = fmt or _guess_format(path)
    if fmt not in FORMATS:
        raise DataFormatError(f"Unknown feature format '{fmt}'. Expected one of {FORMATS}")

    start_time = time()
    X, labels = read_csv_features(path) if fmt == 'csv' else read_raw_features(path)
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise NonFiniteError(f"Non-finite value in '{path}' at sample {bad[1]}, feature {bad[0]}")
    logger.info(f"Loaded {X.shape[1]} samples x {X.shape[0]} features from {path} "
                f"in {time() - start_time:.2f} seconds")
    return X, labels


def load_features(path, fmt=None, class_count=None, name=None):
    """
    Load one domain from a feature file.

    Parameters:
    -----------
    path : str or Path
    fmt : str, optional
        'csv' or 'raw'; guessed from the suffix / sidecar when omitted.
    class_count : int, optional
        Labels must lie in [0, class_count) when given.
    name : str, optional
        Domain name; defaults to the file stem.

    Returns:
    --------
    LabeledDomain or UnlabeledDomain
        Labeled when the file carries labels.
    """
    X, labels = read_feature_file(path, fmt)
    name = name or Path(path).stem
    if labels is None:
        return UnlabeledDomain(X, name=name)
    if labels.size and labels.min() < 0:
        raise LabelRangeError(f"Negative label {labels.min()} in '{path}'")
    if class_count is not None and labels.size and labels.max() >= class_count:
        raise LabelRangeError(f"Label {labels.max()} in '{path}' is outside [0, {class_count})")
    return LabeledDomain(X, labels, name=name)


def remap_labels(labels):
    """
    Map arbitrary label values onto 0..C-1 in sorted order.

    Returns:
    --------
    tuple
        (dense labels, {dense index: original value})
    """
    values, dense = np.unique(np.asarray(labels), return_inverse=True)
    mapping = {int(i): v.item() for i, v in enumerate(values)}
    return dense.astype(np.int64), mapping


def load_domain_pair(source_path, target_path, fmt=None):
    """
    Load a source file (labels required) and a target file (labels optional,
    kept for evaluation only) into a DomainPair over dense class indices.

    Returns:
    --------
    tuple
        (DomainPair, label mapping)
    """
    Xs, ys = read_feature_file(source_path, fmt)
    Xt, yt = read_feature_file(target_path, fmt)
    if ys is None:
        raise DataFormatError(f"Source file '{source_path}' has no '{LABEL_COLUMN}' column")

    dense_source, mapping = remap_labels(ys)
    true_target = None
    if yt is not None:
        index = {original: dense for dense, original in mapping.items()}
        unknown = sorted({v.item() for v in yt} - set(index))
        if unknown:
            raise LabelRangeError(f"Target labels {unknown} in '{target_path}' never occur in the source")
        true_target = np.array([index[v.item()] for v in yt], dtype=np.int64)

    source = LabeledDomain(Xs, dense_source, name=Path(source_path).stem)
    target = UnlabeledDomain(Xt, name=Path(target_path).stem, true_labels=true_target)
    return make_pair(source, target, len(mapping)), mapping


def atomic_write_text(path, text):
    """Write through a temporary file in the same directory, then rename over `path`."""
    atomic_write_bytes(path, text.encode('utf-8'))


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def save_features(path, features, labels=None, fmt='csv'):
    """
    Write an l x m feature matrix so that `load_features` reads it back bit-exactly.

    CSV uses '%.17g' floats with columns f0..f{l-1}; raw writes '<f8' bytes plus the sidecar.
    """
    X = np.asarray(features, dtype=np.float64)
    path = Path(path)
    if fmt == 'csv':
        df = pd.DataFrame(X.T, columns=[f"f{i}" for i in range(X.shape[0])])
        if labels is not None:
            df[LABEL_COLUMN] = np.asarray(labels, dtype=np.int64)
        atomic_write_text(path, df.to_csv(index=False, float_format='%.17g', lineterminator='\n'))
    elif fmt == 'raw':
        atomic_write_bytes(path, np.ascontiguousarray(X.T, dtype='<f8').tobytes())
        meta = {'rows': int(X.shape[1]), 'cols': int(X.shape[0])}
        if labels is not None:
            meta['labels'] = [int(v) for v in labels]
        atomic_write_text(sidecar_path(path), json.dumps(meta, indent=2))
    else:
        raise DataFormatError(f"Unknown feature format '{fmt}'. Expected one of {FORMATS}")
    logger.info(f"Wrote {X.shape[1]} samples to {path}")
