"""Sparse linear operators over complex128 or gmpy2 object arrays.

:class:`SparseOp` stores nonzero entries in coordinate form, sorted by
``(row, col)`` with no duplicates.  Products use a vectorised sort-merge join,
so the same code serves the double-precision and the multiprecision backends
(scipy.sparse has no object dtype, which rules it out for the latter).
"""

from __future__ import annotations

from typing import Any, Iterable, Sequence

import numpy as np

_CHUNK = 2_000_000  # max join products materialised at once


def _is_zero_mask(vals: np.ndarray) -> np.ndarray:
    if vals.dtype == object:
        return np.fromiter((v == 0 for v in vals), dtype=bool, count=len(vals))
    return vals == 0


class SparseOp:
    """An ``m x n`` sparse matrix in canonical coordinate form."""

    __slots__ = ("shape", "rows", "cols", "vals")

    def __init__(self, shape: tuple[int, int], rows, cols, vals, canonical: bool = False):
        self.shape = (int(shape[0]), int(shape[1]))
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if not isinstance(vals, np.ndarray):
            vals = np.asarray(vals, dtype=object if _has_object(vals) else np.complex128)
        if not canonical:
            rows, cols, vals = _canonicalize(self.shape, rows, cols, vals)
        self.rows, self.cols, self.vals = rows, cols, vals

    # construction -----------------------------------------------------------
    @classmethod
    def zeros(cls, shape: tuple[int, int], dtype: Any) -> "SparseOp":
        e = np.zeros(0, dtype=np.int64)
        return cls(shape, e, e, np.zeros(0, dtype=dtype), canonical=True)

    @classmethod
    def diag(cls, values: Sequence[Any], dtype: Any) -> "SparseOp":
        n = len(values)
        idx = np.arange(n, dtype=np.int64)
        return cls((n, n), idx, idx, _array(values, dtype))

    @classmethod
    def identity(cls, n: int, one: Any, dtype: Any) -> "SparseOp":
        return cls.diag([one] * n, dtype)

    @classmethod
    def from_entries(cls, shape, entries: Iterable[tuple[int, int, Any]], dtype: Any) -> "SparseOp":
        entries = list(entries)
        if not entries:
            return cls.zeros(shape, dtype)
        r, c, v = zip(*entries)
        return cls(shape, r, c, _array(v, dtype))

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseOp":
        r, c = np.nonzero(_nonzero_dense(a))
        return cls(a.shape, r, c, a[r, c])

    # basic properties -------------------------------------------------------
    @property
    def dtype(self) -> Any:
        return self.vals.dtype

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def __repr__(self) -> str:
        return f"SparseOp(shape={self.shape}, nnz={self.nnz}, dtype={self.dtype})"

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.dtype)
        if self.dtype == object:
            out[:] = 0
            if self.nnz:
                out[:] = type(self.vals[0])(0)
        out[self.rows, self.cols] = self.vals
        return out

    def to_complex(self) -> "SparseOp":
        return SparseOp(self.shape, self.rows, self.cols,
                        np.array([complex(v) for v in self.vals], dtype=np.complex128), canonical=True)

    def copy_with(self, vals: np.ndarray) -> "SparseOp":
        return SparseOp(self.shape, self.rows, self.cols, vals, canonical=True)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other: "SparseOp") -> "SparseOp":
        _same_shape(self, other)
        return SparseOp(self.shape, np.concatenate([self.rows, other.rows]),
                        np.concatenate([self.cols, other.cols]),
                        _concat_vals(self.vals, other.vals))

    def __neg__(self) -> "SparseOp":
        return self.copy_with(-self.vals)

    def __sub__(self, other: "SparseOp") -> "SparseOp":
        return self + (-other)

    def __mul__(self, c: Any) -> "SparseOp":
        if isinstance(c, SparseOp):
            raise TypeError("use @ for operator products")
        return self.copy_with(self.vals * c)

    __rmul__ = __mul__

    def __matmul__(self, other: "SparseOp") -> "SparseOp":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        m, n = self.shape[0], other.shape[1]
        if self.nnz == 0 or other.nnz == 0:
            return SparseOp.zeros((m, n), _result_dtype(self.vals, other.vals))
        bptr = np.searchsorted(other.rows, np.arange(other.shape[0] + 1))
        counts = bptr[self.cols + 1] - bptr[self.cols]
        cum = np.cumsum(counts)
        # split A's entries into chunks at row boundaries so outputs never overlap
        pieces = []
        start = 0
        total_nnz = self.nnz
        while start < total_nnz:
            base = cum[start - 1] if start else 0
            stop = int(np.searchsorted(cum, base + _CHUNK, side="right"))
            stop = max(stop, start + 1)
            if stop < total_nnz:
                # extend to the end of the current row
                row = self.rows[stop - 1]
                stop = int(np.searchsorted(self.rows, row, side="right"))
            pieces.append(_join(self, other, bptr, counts, start, stop, m, n))
            start = stop
        rows = np.concatenate([p[0] for p in pieces])
        cols = np.concatenate([p[1] for p in pieces])
        vals = _concat_vals(*[p[2] for p in pieces])
        return SparseOp((m, n), rows, cols, vals, canonical=True)

    def kron(self, other: "SparseOp") -> "SparseOp":
        m2, n2 = other.shape
        rows = (self.rows[:, None] * m2 + other.rows[None, :]).ravel()
        cols = (self.cols[:, None] * n2 + other.cols[None, :]).ravel()
        vals = np.multiply.outer(self.vals, other.vals).ravel()
        return SparseOp((self.shape[0] * m2, self.shape[1] * n2), rows, cols, vals)

    @property
    def T(self) -> "SparseOp":
        return SparseOp((self.shape[1], self.shape[0]), self.cols, self.rows, self.vals)

    def scale_rows(self, d: np.ndarray) -> "SparseOp":
        return self.copy_with(self.vals * d[self.rows])

    def scale_cols(self, d: np.ndarray) -> "SparseOp":
        return self.copy_with(self.vals * d[self.cols])

    def power(self, k: int, one: Any) -> "SparseOp":
        out = SparseOp.identity(self.shape[0], one, self.dtype)
        for _ in range(k):
            out = self @ out
        return out

    def diagonal(self) -> np.ndarray:
        out = np.zeros(min(self.shape), dtype=self.dtype)
        if self.dtype == object:
            out[:] = 0
        mask = self.rows == self.cols
        out[self.rows[mask]] = self.vals[mask]
        return out

    def trace(self) -> Any:
        mask = self.rows == self.cols
        return _sum(self.vals[mask])

    def fro_norm(self) -> float:
        if self.nnz == 0:
            return 0.0
        if self.dtype == object:
            return float(sum(abs(v) ** 2 for v in self.vals)) ** 0.5
        return float(np.linalg.norm(self.vals))

    def max_abs(self) -> float:
        if self.nnz == 0:
            return 0.0
        if self.dtype == object:
            return float(max(abs(v) for v in self.vals))
        return float(np.abs(self.vals).max())

    def partial_trace_right(self, d_left: int, d_right: int, weights: np.ndarray) -> "SparseOp":
        """Contract the right tensor factor, weighting diagonal index ``j`` by ``weights[j]``."""
        if self.shape != (d_left * d_right, d_left * d_right):
            raise ValueError("shape does not match the factor dimensions")
        rb, cb = self.rows % d_right, self.cols % d_right
        mask = rb == cb
        vals = self.vals[mask] * weights[rb[mask]]
        return SparseOp((d_left, d_left), self.rows[mask] // d_right, self.cols[mask] // d_right, vals)

    def prune(self, threshold: float) -> "SparseOp":
        """Drop entries of absolute value ``<= threshold``."""
        keep = np.array([abs(v) > threshold for v in self.vals], dtype=bool)
        return SparseOp(self.shape, self.rows[keep], self.cols[keep], self.vals[keep], canonical=True)


# helpers ---------------------------------------------------------------------

def _has_object(vals) -> bool:
    return any(not isinstance(v, (int, float, complex, np.number)) for v in vals)


def _array(values: Sequence[Any], dtype: Any) -> np.ndarray:
    if dtype == object:
        out = np.empty(len(values), dtype=object)
        out[:] = list(values)
        return out
    return np.asarray(values, dtype=dtype)


def _nonzero_dense(a: np.ndarray) -> np.ndarray:
    if a.dtype == object:
        return np.vectorize(lambda v: v != 0, otypes=[bool])(a) if a.size else np.zeros(a.shape, bool)
    return a != 0


def _result_dtype(a: np.ndarray, b: np.ndarray) -> Any:
    return object if (a.dtype == object or b.dtype == object) else np.complex128


def _concat_vals(*arrays: np.ndarray) -> np.ndarray:
    if any(a.dtype == object for a in arrays):
        out = np.empty(sum(len(a) for a in arrays), dtype=object)
        pos = 0
        for a in arrays:
            out[pos:pos + len(a)] = a
            pos += len(a)
        return out
    return np.concatenate(arrays)


def _sum(vals: np.ndarray) -> Any:
    if vals.dtype == object:
        total = 0
        for v in vals:
            total = total + v
        return total
    return complex(vals.sum())


def _same_shape(a: SparseOp, b: SparseOp) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")


def _canonicalize(shape, rows, cols, vals):
    if len(vals) == 0:
        return rows, cols, vals
    keys = rows * shape[1] + cols
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    vals = vals[order]
    starts = np.flatnonzero(np.concatenate([[True], keys[1:] != keys[:-1]]))
    if len(starts) != len(keys):
        vals = np.add.reduceat(vals, starts)
        keys = keys[starts]
    keep = ~_is_zero_mask(vals)
    keys, vals = keys[keep], vals[keep]
    return keys // shape[1], keys % shape[1], vals


def _join(a: SparseOp, b: SparseOp, bptr, counts, start, stop, m, n):
    cnt = counts[start:stop]
    total = int(cnt.sum())
    if total == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e, np.zeros(0, dtype=_result_dtype(a.vals, b.vals))
    rep = np.repeat(np.arange(start, stop), cnt)
    offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    bidx = np.repeat(bptr[a.cols[start:stop]], cnt) + offs
    vals = a.vals[rep] * b.vals[bidx]
    rows = a.rows[rep]
    cols = b.cols[bidx]
    rows, cols, vals = _canonicalize((m, n), rows, cols, vals)
    return rows, cols, vals
