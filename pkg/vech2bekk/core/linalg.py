"""Structural operators of the vech representation

Index conventions are 0-based throughout. For an n x n matrix the maps are

* ``vec_index(row, col)``    position of entry (row, col) in the column-major vec
* ``vech_index(row, col)``   position of a lower-triangle entry in vech
* ``offdiag_index(row, col)`` position of a strictly lower entry among the
  off-diagonal vech entries (same relative order as in vech)

The padding operator rebuilds the n^2 x n^2 Kronecker sum from the d x d vech
coefficient matrix; the auxiliary matrix W is indexed
``W[offdiag_index(column pair), offdiag_index(row pair)]`` and holds the
coefficient of the upper-triangle product in the lower-triangle target entry.
"""
import math
from functools import lru_cache
from typing import Optional, Tuple, List

import numpy as np
from scipy import sparse

from .constants import DEFAULT_PSD_FLOOR, SYMMETRY_RTOL
from ..errors import ConfigError, DataError, DimensionError, NumericFailure
from ..utils.logging_utils import get_logger
from ..utils.typing_utils import Matrix, Vector

logger = get_logger('linalg')


def vech_size(n: int) -> int:
    return n * (n + 1) // 2


def offdiag_size(n: int) -> int:
    return n * (n - 1) // 2


def side_from_vech(d: int) -> int:
    n = int(round((math.sqrt(8 * d + 1) - 1) / 2))
    if d < 1 or vech_size(n) != d:
        raise DimensionError(f'Length {d} is not of the form n(n+1)/2')
    return n


def side_from_square(size: int) -> int:
    n = int(round(math.sqrt(size)))
    if size < 1 or n * n != size:
        raise DimensionError(f'Side {size} is not a perfect square')
    return n


def vec_index(row, col, n: int):
    return col * n + row


def vech_index(row: int, col: int, n: int) -> int:
    if row < col:
        row, col = col, row
    return col * (2 * n - col + 1) // 2 + (row - col)


def offdiag_index(row: int, col: int, n: int) -> int:
    if row == col:
        raise DimensionError('Diagonal entries have no off-diagonal index')
    if row < col:
        row, col = col, row
    return col * (2 * n - col - 1) // 2 + (row - col - 1)


@lru_cache(maxsize=None)
def vech_index_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of the lower triangle taken column by column: (0, 0), (1, 0), ..., (n-1, 0), (1, 1), ...

    Entry j of vech(M) is M[rows[j], cols[j]]; the elimination matrix selects vec positions in this order.
    """
    cols, rows = np.triu_indices(n)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


@lru_cache(maxsize=None)
def offdiag_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = vech_index_pairs(n)
    mask = rows > cols
    off_rows, off_cols = rows[mask], cols[mask]
    off_rows.setflags(write=False)
    off_cols.setflags(write=False)
    return off_rows, off_cols


def _as_square(m: Matrix, what: str = 'matrix') -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f'{what} must be square, got shape {arr.shape}')
    return arr


def _require_symmetric(m: Matrix) -> np.ndarray:
    arr = _as_square(m)
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if not np.allclose(arr, arr.T, rtol=0.0, atol=SYMMETRY_RTOL * scale):
        raise DataError('Symmetric input expected, got an asymmetric matrix', stage='linalg')
    return arr


def vech(m: Matrix) -> Vector:
    arr = _as_square(m)
    rows, cols = vech_index_pairs(arr.shape[0])
    return arr[rows, cols]


def vech_inv(v: Vector) -> Matrix:
    values = np.asarray(v, dtype=float).ravel()
    n = side_from_vech(values.size)
    rows, cols = vech_index_pairs(n)
    out = np.zeros((n, n))
    out[rows, cols] = values
    out[cols, rows] = values
    return out


def vec(m: Matrix) -> Vector:
    return np.asarray(m, dtype=float).reshape(-1, order='F')


def vec_inv(v: Vector, n: Optional[int] = None) -> Matrix:
    values = np.asarray(v, dtype=float).ravel()
    if n is None:
        n = side_from_square(values.size)
    if values.size != n * n:
        raise DimensionError(f'Length {values.size} does not match a {n}x{n} matrix')
    return values.reshape((n, n), order='F')


class SparseSelector(object):
    """Sparse 0/1 (or 1/2) selector such as the duplication matrix"""
    __slots__ = '_matrix',

    def __init__(self, shape: Tuple[int, int], rows: np.ndarray, cols: np.ndarray, values: np.ndarray) -> None:
        self._matrix: sparse.csr_matrix = sparse.csr_matrix((values, (rows, cols)), shape=shape)

    @property
    def shape(self) -> Tuple[int, int]:
        return self._matrix.shape

    @property
    def matrix(self) -> sparse.csr_matrix:
        return self._matrix

    def triples(self) -> List[Tuple[int, int, float]]:
        coo = self._matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), float(coo.data[i])) for i in order]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self._matrix @ np.asarray(x, dtype=float)

    def apply_transpose(self, x: np.ndarray) -> np.ndarray:
        return self._matrix.T @ np.asarray(x, dtype=float)

    def to_dense(self) -> Matrix:
        return self._matrix.toarray()


def _selector_entries(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if n < 1:
        raise DimensionError(f'Dimension must be at least 1, got {n}')
    rows, cols = vech_index_pairs(n)
    positions = np.arange(rows.size)
    lower = vec_index(rows, cols, n)
    upper = vec_index(cols, rows, n)
    return positions, lower, upper, rows != cols


@lru_cache(maxsize=None)
def duplication_matrix(n: int) -> SparseSelector:
    """D_n with D_n vech(M) = vec(M) for symmetric M"""
    positions, lower, upper, off = _selector_entries(n)
    vec_rows = np.concatenate([lower, upper[off]])
    vech_cols = np.concatenate([positions, positions[off]])
    return SparseSelector((n * n, positions.size), vec_rows, vech_cols, np.ones(vec_rows.size))


@lru_cache(maxsize=None)
def elimination_matrix(n: int) -> SparseSelector:
    """Moore-Penrose inverse of D_n, averaging the two copies of every off-diagonal entry"""
    positions, lower, upper, off = _selector_entries(n)
    weights = np.where(off, 0.5, 1.0)
    vech_rows = np.concatenate([positions, positions[off]])
    vec_cols = np.concatenate([lower, upper[off]])
    values = np.concatenate([weights, weights[off]])
    return SparseSelector((positions.size, n * n), vech_rows, vec_cols, values)


def kron(a: Matrix, b: Matrix) -> Matrix:
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def sym_eigen(m: Matrix) -> Tuple[Vector, Matrix]:
    """Eigenpairs of a symmetric matrix, eigenvalues descending

    Eigenvector signs are fixed so that the largest-magnitude entry of every
    column is positive (first such entry on ties).
    """
    arr = _require_symmetric(m)
    try:
        values, vectors = np.linalg.eigh(0.5 * (arr + arr.T))
    except np.linalg.LinAlgError as e:
        raise NumericFailure('Symmetric eigensolver did not converge', stage='linalg', exception=e)
    values = values[::-1]
    vectors = vectors[:, ::-1]
    if vectors.size:
        lead = np.argmax(np.abs(vectors), axis=0)
        signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
        signs[signs == 0] = 1.0
        vectors = vectors * signs
    return values, vectors


def fix_sign(a: Matrix) -> Matrix:
    """Flip a so that its largest-magnitude entry (first in vec order) is positive"""
    a = np.asarray(a, dtype=float)
    flat = vec(a)
    if flat.size == 0:
        return a.copy()
    lead = flat[int(np.argmax(np.abs(flat)))]
    return -a if lead < 0 else a.copy()


def psd_project(m: Matrix, floor: float = DEFAULT_PSD_FLOOR) -> Matrix:
    if floor < 0:
        raise ConfigError(f'Eigenvalue floor must be non-negative, got {floor}')
    values, vectors = sym_eigen(m)
    clipped = np.maximum(values, floor)
    out = (vectors * clipped) @ vectors.T
    return 0.5 * (out + out.T)


def psd_sqrt(m: Matrix) -> Matrix:
    values, vectors = sym_eigen(m)
    out = (vectors * np.sqrt(np.maximum(values, 0.0))) @ vectors.T
    return 0.5 * (out + out.T)


def is_positive_definite(m: Matrix) -> bool:
    try:
        np.linalg.cholesky(np.asarray(m, dtype=float))
    except np.linalg.LinAlgError:
        return False
    return True


def rearrange(m: Matrix) -> Matrix:
    """R(M) with R(A kron A) = vec(A) vec(A)^T"""
    arr = _as_square(m, 'rearranged matrix')
    n = side_from_square(arr.shape[0])
    return arr.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)


def rearrange_adjoint(m: Matrix) -> Matrix:
    """Inverse (and adjoint) of the rearrangement permutation"""
    arr = _as_square(m, 'rearranged matrix')
    n = side_from_square(arr.shape[0])
    return arr.reshape(n, n, n, n).transpose(1, 3, 0, 2).reshape(n * n, n * n)


class PaddingMap(object):
    """Flat index tables of H(Phi, W); every target of H appears once per table"""
    __slots__ = 'n', 'phi_target', 'phi_source', 'phi_coef', 'w_target', 'w_source', 'w_coef'

    def __init__(self, n: int) -> None:
        self.n: int = n
        d = vech_size(n)
        g = offdiag_size(n)
        side = n * n
        rows, cols = vech_index_pairs(n)
        i_idx, j_idx = np.meshgrid(np.arange(d), np.arange(d), indexing='ij')
        i_idx, j_idx = i_idx.ravel(), j_idx.ravel()
        r, c = rows[i_idx], cols[i_idx]
        a, b = rows[j_idx], cols[j_idx]
        source = i_idx * d + j_idx
        row_diag, col_diag = r == c, a == b

        def target(hr, hc):
            return hr * side + hc

        phi_parts = []
        # diagonal row, diagonal column
        m = row_diag & col_diag
        phi_parts.append((target(vec_index(r[m], r[m], n), vec_index(a[m], a[m], n)), source[m], 1.0))
        # diagonal row, merged off-diagonal column: split evenly
        m = row_diag & ~col_diag
        phi_parts.append((target(vec_index(r[m], r[m], n), vec_index(a[m], b[m], n)), source[m], 0.5))
        phi_parts.append((target(vec_index(r[m], r[m], n), vec_index(b[m], a[m], n)), source[m], 0.5))
        # off-diagonal row, diagonal column: copied to both symmetric rows
        m = ~row_diag & col_diag
        phi_parts.append((target(vec_index(r[m], c[m], n), vec_index(a[m], a[m], n)), source[m], 1.0))
        phi_parts.append((target(vec_index(c[m], r[m], n), vec_index(a[m], a[m], n)), source[m], 1.0))
        # off-diagonal row and column: Phi - W on the aligned positions, W on the crossed ones
        m = ~row_diag & ~col_diag
        aligned = target(vec_index(r[m], c[m], n), vec_index(a[m], b[m], n))
        aligned_t = target(vec_index(c[m], r[m], n), vec_index(b[m], a[m], n))
        crossed = target(vec_index(r[m], c[m], n), vec_index(b[m], a[m], n))
        crossed_t = target(vec_index(c[m], r[m], n), vec_index(a[m], b[m], n))
        phi_parts.append((aligned, source[m], 1.0))
        phi_parts.append((aligned_t, source[m], 1.0))

        self.phi_target = np.concatenate([p[0] for p in phi_parts]).astype(np.int64)
        self.phi_source = np.concatenate([p[1] for p in phi_parts]).astype(np.int64)
        self.phi_coef = np.concatenate([np.full(p[0].size, p[2]) for p in phi_parts])

        w_flat = (b[m] * (2 * n - b[m] - 1) // 2 + (a[m] - b[m] - 1)) * g \
            + (c[m] * (2 * n - c[m] - 1) // 2 + (r[m] - c[m] - 1))
        self.w_target = np.concatenate([aligned, aligned_t, crossed, crossed_t]).astype(np.int64)
        self.w_source = np.tile(w_flat, 4).astype(np.int64)
        self.w_coef = np.repeat([-1.0, -1.0, 1.0, 1.0], w_flat.size)

    def apply(self, phi: Matrix, w: Optional[Matrix]) -> Matrix:
        side = self.n * self.n
        out = np.zeros(side * side)
        out[self.phi_target] = self.phi_coef * np.asarray(phi, dtype=float).ravel()[self.phi_source]
        if self.w_source.size:
            out[self.w_target] += self.w_coef * np.asarray(w, dtype=float).ravel()[self.w_source]
        return out.reshape(side, side)

    def adjoint_w(self, grad_h: Matrix) -> Matrix:
        g = offdiag_size(self.n)
        weights = self.w_coef * np.asarray(grad_h, dtype=float).ravel()[self.w_target]
        return np.bincount(self.w_source, weights=weights, minlength=g * g).reshape(g, g)


@lru_cache(maxsize=32)
def padding_map(n: int) -> PaddingMap:
    if n < 1:
        raise DimensionError(f'Dimension must be at least 1, got {n}')
    return PaddingMap(n)


def _check_pad_inputs(phi: Matrix, w: Optional[Matrix]) -> Tuple[np.ndarray, np.ndarray, int]:
    phi_arr = _as_square(phi, 'Phi')
    n = side_from_vech(phi_arr.shape[0])
    g = offdiag_size(n)
    w_arr = np.zeros((g, g)) if w is None else np.asarray(w, dtype=float)
    if w_arr.size == 0 and g == 0:
        w_arr = np.zeros((0, 0))
    if w_arr.shape != (g, g):
        raise DimensionError(f'W must be {g}x{g} for N={n}, got shape {w_arr.shape}')
    return phi_arr, w_arr, n


def pad(phi: Matrix, w: Optional[Matrix]) -> Matrix:
    """H(Phi, W): the n^2 x n^2 matrix consistent with Phi given the split coefficients W"""
    phi_arr, w_arr, n = _check_pad_inputs(phi, w)
    return padding_map(n).apply(phi_arr, w_arr)


def pad_adjoint_w(grad_h: Matrix, n: int) -> Matrix:
    return padding_map(n).adjoint_w(grad_h)


def padded_rearranged(phi: Matrix, w: Optional[Matrix]) -> Matrix:
    return rearrange(pad(phi, w))


def split_from_kron(kron_sum: Matrix) -> Matrix:
    """The auxiliary matrix W that makes H(Phi, W) reproduce a given Kronecker sum"""
    arr = _as_square(kron_sum, 'Kronecker sum')
    n = side_from_square(arr.shape[0])
    off_rows, off_cols = offdiag_pairs(n)
    target_rows = vec_index(off_rows, off_cols, n)
    upper_cols = vec_index(off_cols, off_rows, n)
    return arr[np.ix_(target_rows, upper_cols)].T.copy()


def half_split(phi: Matrix) -> Matrix:
    """Initial W assigning half of every merged coefficient to each product"""
    phi_arr = _as_square(phi, 'Phi')
    n = side_from_vech(phi_arr.shape[0])
    rows, cols = vech_index_pairs(n)
    off = np.flatnonzero(rows > cols)
    return 0.5 * phi_arr[np.ix_(off, off)].T


def phi_from_kron(kron_sum: Matrix) -> Matrix:
    """D^+ (sum_k A_k kron A_k) D"""
    arr = _as_square(kron_sum, 'Kronecker sum')
    n = side_from_square(arr.shape[0])
    kd = np.asarray(duplication_matrix(n).matrix.T @ arr.T).T
    return np.asarray(elimination_matrix(n).apply(kd))
