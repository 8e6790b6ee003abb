"""Matrix storage with equally fast row and column access, plus dense oracles.

Extended Kaczmarz methods touch one row and one column of A per step, so
sparse matrices are stored in a dual CSR + CSC layout (both views of the
same entries).  Dense matrices wrap a contiguous 2-D array.  The module
also hosts the desk-scale direct least-squares and Gram-eigenvalue oracles
used for ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORACLE_MAX_ROWS = 5000
ORACLE_MAX_COLS = 2000
RANK_TOL = 1e-12


class OracleTooLargeError(ValueError):
    """Raised when a dense oracle is asked to factor beyond its size cap."""


class DenseMatrix:
    """Dense real matrix in row-major storage."""

    def __init__(self, values):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("DenseMatrix requires a 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("DenseMatrix entries must be finite")
        self.values = arr
        self.rows, self.cols = arr.shape

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_sparse(self):
        return False

    def row(self, i):
        """The i-th row as a dense view (no copy)."""
        if not 0 <= i < self.rows:
            raise IndexError(f"row index {i} out of range for {self.rows} rows")
        return self.values[i]

    def col(self, j):
        """The j-th column as a dense view."""
        if not 0 <= j < self.cols:
            raise IndexError(f"col index {j} out of range for {self.cols} cols")
        return self.values[:, j]

    # Dense row/col "vectors" coincide with the views above.
    row_vec = row
    col_vec = col

    def row_dot(self, i, x):
        return float(self.row(i) @ x)

    def col_dot(self, j, z):
        return float(self.col(j) @ z)

    def row_pair_dot(self, i1, i2):
        return float(self.row(i1) @ self.row(i2))

    def col_pair_dot(self, j1, j2):
        return float(self.col(j1) @ self.col(j2))

    def add_scaled_row(self, x, i, c):
        """x += c * A^(i), in place."""
        x += c * self.row(i)

    def add_scaled_col(self, z, j, c):
        """z += c * A_(j), in place."""
        z += c * self.col(j)

    def matvec(self, x):
        return self.values @ x

    def rmatvec(self, z):
        return self.values.T @ z

    def mat_row(self, i):
        """A @ (A^(i))^T as a dense m-vector."""
        return self.values @ self.row(i)

    def mat_t_col(self, j):
        """A^T @ A_(j) as a dense n-vector."""
        return self.values.T @ self.col(j)

    def to_dense(self):
        return self.values.copy()


class DualSparseMatrix:
    """Sparse real matrix stored in both CSR and CSC form.

    Both views hold identical (i, j, v) triples; indices are strictly
    increasing within each row (CSR) and each column (CSC).  Row access
    costs O(nnz/m) and column access O(nnz/n), which is what alternating
    row/column action methods need.
    """

    def __init__(self, rows, cols, i, j, v):
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        if not (i.shape == j.shape == v.shape) or i.ndim != 1:
            raise ValueError("triple arrays must be 1-D and equal length")
        if not np.all(np.isfinite(v)):
            raise ValueError("sparse entries must be finite")
        if i.size and (i.min() < 0 or i.max() >= rows or j.min() < 0 or j.max() >= cols):
            raise ValueError("triple index out of range")
        self.rows = int(rows)
        self.cols = int(cols)

        order = np.lexsort((j, i))  # row-major
        ri, rj, rv = i[order], j[order], v[order]
        if ri.size > 1 and np.any((ri[1:] == ri[:-1]) & (rj[1:] == rj[:-1])):
            raise ValueError("duplicate (i, j) entry")
        self.csr_indptr = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(ri, minlength=rows), out=self.csr_indptr[1:])
        self.csr_indices = rj
        self.csr_data = rv
        self.csr_rowids = ri

        order = np.lexsort((i, j))  # column-major
        ci, cj, cv = i[order], j[order], v[order]
        self.csc_indptr = np.zeros(cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(cj, minlength=cols), out=self.csc_indptr[1:])
        self.csc_indices = ci
        self.csc_data = cv

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_sparse(self):
        return True

    @property
    def nnz(self):
        return self.csr_data.size

    def row(self, i):
        """(col_indices, values) of the i-th row."""
        if not 0 <= i < self.rows:
            raise IndexError(f"row index {i} out of range for {self.rows} rows")
        sl = slice(self.csr_indptr[i], self.csr_indptr[i + 1])
        return self.csr_indices[sl], self.csr_data[sl]

    def col(self, j):
        """(row_indices, values) of the j-th column."""
        if not 0 <= j < self.cols:
            raise IndexError(f"col index {j} out of range for {self.cols} cols")
        sl = slice(self.csc_indptr[j], self.csc_indptr[j + 1])
        return self.csc_indices[sl], self.csc_data[sl]

    def row_vec(self, i):
        out = np.zeros(self.cols)
        idx, val = self.row(i)
        out[idx] = val
        return out

    def col_vec(self, j):
        out = np.zeros(self.rows)
        idx, val = self.col(j)
        out[idx] = val
        return out

    def row_dot(self, i, x):
        idx, val = self.row(i)
        return float(val @ x[idx])

    def col_dot(self, j, z):
        idx, val = self.col(j)
        return float(val @ z[idx])

    def row_pair_dot(self, i1, i2):
        scratch = np.zeros(self.cols)
        idx1, val1 = self.row(i1)
        scratch[idx1] = val1
        idx2, val2 = self.row(i2)
        return float(val2 @ scratch[idx2])

    def col_pair_dot(self, j1, j2):
        scratch = np.zeros(self.rows)
        idx1, val1 = self.col(j1)
        scratch[idx1] = val1
        idx2, val2 = self.col(j2)
        return float(val2 @ scratch[idx2])

    def add_scaled_row(self, x, i, c):
        idx, val = self.row(i)
        x[idx] += c * val

    def add_scaled_col(self, z, j, c):
        idx, val = self.col(j)
        z[idx] += c * val

    def matvec(self, x):
        return np.bincount(
            self.csr_rowids,
            weights=self.csr_data * x[self.csr_indices],
            minlength=self.rows,
        )

    def rmatvec(self, z):
        return np.bincount(
            self.csr_indices,
            weights=self.csr_data * z[self.csr_rowids],
            minlength=self.cols,
        )

    def mat_row(self, i):
        """A @ (A^(i))^T, assembled from the columns in the row's support."""
        out = np.zeros(self.rows)
        idx, val = self.row(i)
        for j, v in zip(idx, val):
            sl = slice(self.csc_indptr[j], self.csc_indptr[j + 1])
            out[self.csc_indices[sl]] += v * self.csc_data[sl]
        return out

    def mat_t_col(self, j):
        """A^T @ A_(j), assembled from the rows in the column's support."""
        out = np.zeros(self.cols)
        idx, val = self.col(j)
        for i, v in zip(idx, val):
            sl = slice(self.csr_indptr[i], self.csr_indptr[i + 1])
            out[self.csr_indices[sl]] += v * self.csr_data[sl]
        return out

    def triples(self):
        """Canonical row-major (i, j, v) arrays, for equality and I/O."""
        return self.csr_rowids, self.csr_indices, self.csr_data

    def to_dense(self):
        out = np.zeros((self.rows, self.cols))
        out[self.csr_rowids, self.csr_indices] = self.csr_data
        return out


def row_view(A, i):
    """The i-th row: dense view, or (index, value) pairs for sparse."""
    return A.row(i)


def col_view(A, j):
    """The j-th column: dense view, or (index, value) pairs for sparse."""
    return A.col(j)


@dataclass(frozen=True)
class NormCache:
    row_sq_norms: np.ndarray
    col_sq_norms: np.ndarray
    frob_sq: float


def build_norm_cache(A) -> NormCache:
    """Squared row/column norms and the squared Frobenius norm of A."""
    if A.is_sparse:
        sq = A.csr_data**2
        row_sq = np.bincount(A.csr_rowids, weights=sq, minlength=A.rows)
        col_sq = np.bincount(A.csr_indices, weights=sq, minlength=A.cols)
    else:
        sq = A.values**2
        row_sq = sq.sum(axis=1)
        col_sq = sq.sum(axis=0)
    return NormCache(row_sq, col_sq, float(row_sq.sum()))


def _check_oracle_cap(A):
    if A.rows > ORACLE_MAX_ROWS or A.cols > ORACLE_MAX_COLS:
        raise OracleTooLargeError(
            f"{A.rows}x{A.cols} exceeds the {ORACLE_MAX_ROWS}x{ORACLE_MAX_COLS} oracle cap"
        )


def direct_least_squares(A, b):
    """Minimum-norm least-squares solution of min ||b - Ax|| (dense SVD).

    Rank-revealing, so rank-deficient A returns the pseudoinverse solution.
    """
    _check_oracle_cap(A)
    b = np.asarray(b, dtype=np.float64)
    x, *_ = np.linalg.lstsq(A.to_dense(), b, rcond=None)
    return x


def gram_extreme_eigenvalues(A):
    """(smallest nonzero, largest) eigenvalue of A^T A.

    Eigenvalues below 1e-12 * lambda_max are treated as zero (rank
    tolerance for the pseudoinverse/"nonzero minimal eigenvalue" notion).
    """
    _check_oracle_cap(A)
    dense = A.to_dense()
    evals = np.linalg.eigvalsh(dense.T @ dense)
    evals = np.clip(evals, 0.0, None)
    lam_max = float(evals[-1])
    if lam_max == 0.0:
        return 0.0, 0.0
    nonzero = evals[evals > RANK_TOL * lam_max]
    return float(nonzero[0]), lam_max
