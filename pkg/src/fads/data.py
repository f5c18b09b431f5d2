"""Datasets on the unit sphere and the normalization recipes that produce them.

Three preprocessing routes are supported: plain row-wise l2 normalization,
tf-idf weighting of count matrices (followed by l2 normalization), and the
square-root transform that maps compositional rows onto the sphere.
Dense CSV and sparse (row, col, value) triplet files are the on-disk formats.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

ROW_NORM_TOL = 1e-10

PROVENANCE_RAW = "raw-normalized"
PROVENANCE_TFIDF = "tfidf-l2"
PROVENANCE_SQRT = "sqrt-composition"
PROVENANCE_SIMULATED = "simulated"
_PROVENANCES = (PROVENANCE_RAW, PROVENANCE_TFIDF, PROVENANCE_SQRT, PROVENANCE_SIMULATED)


@dataclass
class SphericalDataset:
    """n observations of unit p-vectors, with how they got on the sphere."""

    rows: np.ndarray
    provenance: str = PROVENANCE_RAW
    column_names: list = field(default=None, repr=False)

    def __post_init__(self):
        self.rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.float64))
        if self.rows.ndim != 2:
            raise DomainError("rows must be a 2-d matrix")
        if self.provenance not in _PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.rows)):
            raise DomainError("dataset contains non-finite entries")
        norms = np.linalg.norm(self.rows, axis=1)
        bad = np.abs(norms - 1.0) > ROW_NORM_TOL
        if bad.any():
            i = int(np.argmax(bad))
            raise DomainError(f"row {i} has norm {norms[i]:.12g}, not unit")

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def p(self):
        return self.rows.shape[1]


def l2_normalize(matrix, provenance=PROVENANCE_RAW):
    """Divide each row by its Euclidean norm.

    Raises on all-zero rows, naming the first offender.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DomainError("expected a 2-d matrix")
    norms = np.linalg.norm(matrix, axis=1)
    zero = norms == 0.0
    if zero.any():
        raise DomainError(f"row {int(np.argmax(zero))} is all zeros; cannot normalize")
    return SphericalDataset(matrix / norms[:, None], provenance=provenance)


def tfidf_weight(counts):
    """tf-idf weighting of a document-term count matrix.

    Entry (i, j) becomes ``counts[i, j] * log(n / docfreq_j)`` where
    ``docfreq_j`` is the number of documents in which term j appears.
    Returns the weighted matrix (not yet normalized).
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2:
        raise DomainError("expected a 2-d count matrix")
    if (counts < 0).any():
        raise DomainError("counts must be nonnegative")
    n = counts.shape[0]
    docfreq = np.count_nonzero(counts > 0, axis=0)
    if (docfreq == 0).any():
        j = int(np.argmax(docfreq == 0))
        raise DomainError(f"column {j} appears in no document; idf undefined")
    return counts * np.log(n / docfreq)


def sqrt_composition(matrix, tol=1e-8):
    """Elementwise square root of compositional rows (nonnegative, summing to 1)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DomainError("expected a 2-d matrix")
    if (matrix < 0).any():
        raise DomainError("compositional data must be nonnegative")
    sums = matrix.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol
    if bad.any():
        i = int(np.argmax(bad))
        raise DomainError(f"row {i} sums to {sums[i]:.12g}, not 1")
    root = np.sqrt(matrix)
    # tiny renormalization absorbs the allowed row-sum slack
    root /= np.linalg.norm(root, axis=1)[:, None]
    return SphericalDataset(root, provenance=PROVENANCE_SQRT)


def _looks_like_header(line):
    for tok in line.split(","):
        try:
            float(tok)
        except ValueError:
            return True
    return False


def read_dense_csv(path):
    """Dense CSV, one observation per row, optional single header line.

    Returns (matrix, column_names_or_None).
    """
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise DomainError(f"{path}: empty file")
        names = None
        if _looks_like_header(first):
            names = [t.strip() for t in first.rstrip("\n").split(",")]
            body = fh.read()
        else:
            body = first + fh.read()
    try:
        matrix = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DomainError(f"{path}: could not parse CSV ({exc})") from exc
    return matrix, names


def write_dense_csv(path, matrix, column_names=None):
    """Write a dense CSV using shortest round-trip decimal representations."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        if column_names is not None:
            fh.write(",".join(column_names) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_sparse_triplets(path, n=None, p=None):
    """Sparse (row, col, value) triplets with zero-based indices.

    Shape is inferred from the maximum indices unless given explicitly.
    """
    raw, _ = read_dense_csv(path)
    if raw.shape[1] != 3:
        raise DomainError(f"{path}: triplet file must have exactly 3 columns")
    rows = raw[:, 0].astype(np.int64)
    cols = raw[:, 1].astype(np.int64)
    if (rows < 0).any() or (cols < 0).any():
        raise DomainError("triplet indices must be nonnegative")
    if np.any(raw[:, 0] != rows) or np.any(raw[:, 1] != cols):
        raise DomainError("triplet indices must be integers")
    n = int(rows.max()) + 1 if n is None else n
    p = int(cols.max()) + 1 if p is None else p
    if rows.max() >= n or cols.max() >= p:
        raise DomainError("triplet index outside the declared shape")
    dense = np.zeros((n, p))
    dense[rows, cols] = raw[:, 2]
    return dense
