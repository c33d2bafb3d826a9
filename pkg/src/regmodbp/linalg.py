"""Dense real matrix/vector kernel.

Everything downstream works with plain float64 numpy arrays; this module
owns the validated constructors, the index-set conventions, the small
factorization-based operations, and the projector

    M(S) = I - A_S (A_S' A_S)^{-1} A_S'

onto the orthogonal complement of the span of the columns A_S.

Index sets are sorted, duplicate-free int64 arrays everywhere, and all
set algebra is merge-based, so column selections and therefore all
derived quantities are bit-reproducible.
"""

import numpy as np
from scipy.linalg import solve_triangular

SYM_TOL = 1e-12
SPD_PIVOT_REL = 1e-12
JACOBI_OFF_REL = 1e-14
MAX_EIG_DIM = 64


class NotSpdError(ValueError):
    """Matrix failed the symmetric positive definite factorization."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite: pivot {pivot} = {value:.3e}")


def check_matrix(a) -> np.ndarray:
    """Validated dense matrix: 2-d, float64, all entries finite."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def check_vector(v) -> np.ndarray:
    """Validated dense vector: 1-d, float64, all entries finite."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d array, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def index_set(s) -> np.ndarray:
    """Sorted duplicate-free int64 index array."""
    arr = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return np.unique(arr)


def set_union(a, b) -> np.ndarray:
    return np.union1d(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))


def set_diff(a, b) -> np.ndarray:
    return np.setdiff1d(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))


def set_intersect(a, b) -> np.ndarray:
    return np.intersect1d(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))


def complement(s, n: int) -> np.ndarray:
    """Indices in [0, n) not in s, ascending."""
    return set_diff(np.arange(n, dtype=np.int64), s)


def submatrix_cols(a, s) -> np.ndarray:
    """Columns of a with indices in s, in ascending index order."""
    a = check_matrix(a)
    s = index_set(s)
    if s.size and (s[0] < 0 or s[-1] >= a.shape[1]):
        raise IndexError(f"column index out of range for {a.shape[1]} columns")
    return a[:, s]


def solve_spd(g, b) -> np.ndarray:
    """Solve G X = B for symmetric positive definite G.

    Uses an unpivoted Cholesky factorization; a pivot at or below
    SPD_PIVOT_REL times the largest diagonal entry raises NotSpdError
    carrying the failing pivot index.
    """
    g = check_matrix(g)
    n = g.shape[0]
    if g.shape[1] != n:
        raise ValueError("matrix must be square")
    scale = max(1.0, np.abs(g).max()) if n else 1.0
    if n and np.abs(g - g.T).max() > SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    b_arr = np.asarray(b, dtype=np.float64)
    squeeze = b_arr.ndim == 1
    rhs = b_arr.reshape(n, -1) if squeeze else b_arr
    if rhs.shape[0] != n:
        raise ValueError("right-hand side has wrong leading dimension")
    if n == 0:
        return np.zeros(0) if squeeze else np.zeros(rhs.shape)

    floor = SPD_PIVOT_REL * max(np.max(np.diag(g)), 0.0)
    low = np.zeros((n, n))
    for j in range(n):
        d = g[j, j] - low[j, :j] @ low[j, :j]
        if d <= floor:
            raise NotSpdError(j, float(d))
        low[j, j] = np.sqrt(d)
        if j + 1 < n:
            low[j + 1:, j] = (g[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]

    y = solve_triangular(low, rhs, lower=True)
    x = solve_triangular(low.T, y, lower=False)
    return x[:, 0] if squeeze else x


def sym_eigvals(g) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending.

    Cyclic Jacobi rotations, swept until the off-diagonal Frobenius mass
    drops below JACOBI_OFF_REL times the Frobenius norm of the input.
    Intended for the small (<= 64) matrices this library needs.
    """
    g = check_matrix(g)
    n = g.shape[0]
    if g.shape[1] != n:
        raise ValueError("matrix must be square")
    if n > MAX_EIG_DIM:
        raise ValueError(f"matrix of size {n} exceeds the {MAX_EIG_DIM} eigensolver cap")
    scale = max(1.0, np.abs(g).max()) if n else 1.0
    if n and np.abs(g - g.T).max() > SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    if n <= 1:
        return np.diag(g).copy()

    a = g.copy()
    fro = np.linalg.norm(g)
    target = JACOBI_OFF_REL * fro
    for _ in range(100):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= target / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0 else 1.0
                t /= abs(theta) + np.sqrt(theta * theta + 1.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def operator_norm(b) -> float:
    """Induced 2-norm, via the eigenvalues of the smaller Gram matrix."""
    b = check_matrix(b)
    if b.size == 0:
        raise ValueError("operator norm of an empty matrix")
    gram = b @ b.T if b.shape[0] <= b.shape[1] else b.T @ b
    top = sym_eigvals(gram)[-1]
    return float(np.sqrt(max(top, 0.0)))


def projector(a, s) -> np.ndarray:
    """M(S) = I - A_S (A_S' A_S)^{-1} A_S', the n x n projector with
    M A_S = 0.  Requires A_S' A_S positive definite."""
    a = check_matrix(a)
    cols = submatrix_cols(a, s)
    n = a.shape[0]
    if cols.shape[1] == 0:
        return np.eye(n)
    gram = cols.T @ cols
    try:
        x = solve_spd(gram, cols.T)
    except NotSpdError as exc:
        raise ValueError("support Gram singular") from exc
    return np.eye(n) - cols @ x


def write_matrix_csv(path, a) -> None:
    """Plain decimal CSV, one row per line; values round-trip exactly."""
    a = check_matrix(a)
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError(f"no data in {path}")
    return check_matrix(np.array(rows, dtype=np.float64))


def write_vector_csv(path, v) -> None:
    """A vector is stored as a single-column CSV."""
    v = check_vector(v)
    write_matrix_csv(path, v.reshape(-1, 1))


def read_vector_csv(path) -> np.ndarray:
    a = read_matrix_csv(path)
    if a.shape[1] != 1:
        raise ValueError(f"expected a single-column CSV, got {a.shape[1]} columns")
    return a[:, 0]
