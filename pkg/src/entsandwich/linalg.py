"""Dense complex linear algebra on composite Hilbert spaces.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Composite basis
indices are big-endian in factor order: for factor indices ``(j_1, ..., j_p)``
the composite index is ``sum_a j_a * prod_{b > a} n_b``, which is exactly the
ordering produced by ``np.kron`` and by ``reshape`` in C order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

DEFAULT_CAP = 4096

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9
EIG_HERMITIAN_TOL = 1e-10


class InvariantError(ValueError):
    """A value violates a structural invariant (hermiticity, trace, norm...)."""


class ProfileMismatchError(ValueError):
    """Two objects live on different composite spaces."""


class SizeCapError(ValueError):
    """A composite dimension exceeds the configured cap."""


@dataclass(frozen=True)
class DimensionProfile:
    """Factor dimensions ``n_1 <= ... <= n_p`` of a composite space.

    Parameters
    ----------
    dims : sequence of int
        Local dimensions, each ``>= 2``, sorted ascending, at least two of them.
    cap : int, optional
        Largest allowed total dimension ``N``.
    """

    dims: tuple[int, ...]
    cap: int = field(default=DEFAULT_CAP, compare=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise InvariantError(f"need at least two factors, got dims={list(dims)}")
        if min(dims) < 2:
            raise InvariantError(f"every factor dimension must be >= 2, got dims={list(dims)}")
        if list(dims) != sorted(dims):
            raise InvariantError(f"dims must be sorted ascending, got dims={list(dims)}")
        if prod(dims) > self.cap:
            raise SizeCapError(f"total dimension {prod(dims)} exceeds cap {self.cap}")

    @property
    def total(self) -> int:
        return prod(self.dims)

    @property
    def parties(self) -> int:
        return len(self.dims)

    def composite_index(self, local: Sequence[int]) -> int:
        """Composite basis index of the product ket ``|j_1 ... j_p>``."""
        if len(local) != len(self.dims):
            raise ProfileMismatchError(f"expected {len(self.dims)} local indices, got {len(local)}")
        index = 0
        for j, n in zip(local, self.dims):
            if not 0 <= j < n:
                raise IndexError(f"local index {j} out of range for factor of dimension {n}")
            index = index * n + j
        return index


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise InvariantError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantError("matrix contains NaN or Inf")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace positive-semidefinite Hermitian operator on a composite space.

    The matrix is validated and copied into a read-only array on construction.
    """

    profile: DimensionProfile
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat)
        n = self.profile.total
        if m.shape != (n, n):
            raise ProfileMismatchError(f"matrix shape {m.shape} does not match profile total {n}")
        asym = np.max(np.abs(m - m.conj().T))
        if asym > HERMITIAN_TOL:
            raise InvariantError(f"density matrix not Hermitian (max deviation {asym:.3e})")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise InvariantError(f"density matrix trace {tr.real:.15g} differs from 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -PSD_TOL:
            raise InvariantError(f"density matrix not PSD (min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "mat", _frozen(m))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.profile.dims

    @classmethod
    def maximally_mixed(cls, profile: DimensionProfile) -> "DensityMatrix":
        n = profile.total
        return cls(profile, np.eye(n, dtype=np.complex128) / n)

    def purity(self) -> float:
        return float(hs_inner(self.mat, self.mat).real)


def tensor(a, b, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Kronecker product ``a (x) b`` with a cap on the resulting row count."""
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    if rows > cap:
        raise SizeCapError(f"tensor product dimension {rows} exceeds cap {cap}")
    return np.kron(a, b)


def tensor_all(mats: Sequence, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Left-to-right chained Kronecker product."""
    out = as_matrix(mats[0])
    for m in mats[1:]:
        out = tensor(out, m, cap=cap)
    return out


def hs_inner(a, b) -> complex | np.ndarray:
    """Hilbert-Schmidt pairing ``Tr(a^dagger b)``.

    Leading axes are treated as batch dimensions, so stacks of matrices of
    shape ``(..., N, N)`` give an array of shape ``(...)``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape[-2:] != b.shape[-2:] or a.ndim < 2 or b.ndim < 2:
        raise ProfileMismatchError(f"shape mismatch in hs_inner: {a.shape} vs {b.shape}")
    if a.shape[-1] != a.shape[-2]:
        raise ProfileMismatchError(f"hs_inner expects square matrices, got {a.shape}")
    out = np.einsum("...ij,...ij->...", a.conj(), b)
    return complex(out) if out.ndim == 0 else out


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ProfileMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(max(hs_inner(d, d).real, 0.0)))


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns
    -------
    eigenvalues : ndarray of float
    eigenvectors : ndarray
        Column ``k`` is the eigenvector for ``eigenvalues[k]``.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise InvariantError(f"expected a square matrix, got {m.shape}")
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > EIG_HERMITIAN_TOL:
        raise InvariantError(f"matrix not Hermitian (max deviation {asym:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (factor order preserved)."""
    dims = tuple(dims)
    p = len(dims)
    keep = sorted(set(keep))
    t = np.asarray(m, dtype=np.complex128).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * p > len(letters):
        raise ValueError("too many factors for partial_trace")
    ket = list(letters[:p])
    bra = list(letters[p:2 * p])
    for a in range(p):
        if a not in keep:
            bra[a] = ket[a]
    out = "".join(ket[a] for a in keep) + "".join(bra[a] for a in keep)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    n = prod(dims[a] for a in keep)
    return reduced.reshape(n, n)


# -- JSON ------------------------------------------------------------------


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(dims: Sequence[int], mat) -> dict:
    """Matrix JSON object: ``{"dims": [...], "matrix": [[[re, im], ...], ...]}``.

    Floats are serialized with ``repr``, which round-trips doubles exactly.
    """
    m = as_matrix(mat)
    return {
        "dims": [int(d) for d in dims],
        "matrix": [[_encode_complex(z) for z in row] for row in m],
    }


def _decode_complex(entry) -> complex:
    if isinstance(entry, (int, float)) and not isinstance(entry, bool):
        return complex(entry)
    if not (isinstance(entry, list) and len(entry) == 2):
        raise InvariantError(f"complex entry must be [re, im], got {entry!r}")
    re, im = entry
    return complex(float(re), float(im))


def matrix_from_json(obj: dict) -> tuple[tuple[int, ...], np.ndarray]:
    if "dims" not in obj or "matrix" not in obj:
        raise InvariantError("matrix JSON requires 'dims' and 'matrix' keys")
    dims = tuple(int(d) for d in obj["dims"])
    rows = obj["matrix"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InvariantError("'matrix' must be an array of rows")
    width = {len(r) for r in rows}
    if len(width) > 1:
        raise InvariantError("'matrix' rows have unequal lengths")
    mat = np.array([[_decode_complex(z) for z in r] for r in rows], dtype=np.complex128)
    return dims, as_matrix(mat.reshape(len(rows), -1))


def density_to_json(rho: DensityMatrix) -> dict:
    return matrix_to_json(rho.dims, rho.mat)


def density_from_json(obj: dict, cap: int = DEFAULT_CAP) -> DensityMatrix:
    dims, mat = matrix_from_json(obj)
    return DensityMatrix(DimensionProfile(dims, cap=cap), mat)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
