"""Constructors for the state families used by the witness.

Local bases are the computational bases of each factor. States written in
other local bases are handled by conjugating with local unitaries, see
:func:`local_conjugate`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    DensityMatrix,
    DimensionProfile,
    InvariantError,
    ProfileMismatchError,
    tensor_all,
)

NORM_TOL = 1e-9
UNIT_TOL = 1e-12
# max |v_j|^2 above this is treated as a product state
PRODUCT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SchmidtVector:
    """Coefficients of ``psi = sum_j v_j |j j ... j>`` over ``n_1`` terms.

    ``dominant_index`` is 0-based: the smallest ``j`` attaining ``max |v_j|``.
    """

    profile: DimensionProfile
    coeffs: np.ndarray
    dominant_index: int

    @property
    def threshold(self) -> float:
        """Squared modulus of the dominant coefficient, ``max_j |v_j|^2``.

        Computed exactly like the projector's diagonal entries so boundary
        comparisons are bit-exact.
        """
        return _weight(self.coeffs[self.dominant_index])

    def ket(self) -> np.ndarray:
        psi = np.zeros(self.profile.total, dtype=np.complex128)
        for j, v in enumerate(self.coeffs):
            psi[diagonal_index(self.profile, j)] = v
        return psi

    def projector(self) -> DensityMatrix:
        psi = self.ket()
        m = np.outer(psi, psi.conj())
        m = 0.5 * (m + m.conj().T)
        # vectorized products may fuse; pin the diagonal to the scalar weights
        for j, v in enumerate(self.coeffs):
            i = diagonal_index(self.profile, j)
            m[i, i] = _weight(v)
        return DensityMatrix(self.profile, m)

    def to_json(self) -> dict:
        return {
            "dims": list(self.profile.dims),
            "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
        }


@dataclass(frozen=True, eq=False)
class ProductFactors:
    """One unit vector per factor; ``factors[a]`` has length ``dims[a]``."""

    profile: DimensionProfile
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = self.profile.dims
        if len(self.factors) != len(dims):
            raise ProfileMismatchError(f"expected {len(dims)} factors, got {len(self.factors)}")
        frozen = []
        for a, (f, n) in enumerate(zip(self.factors, dims)):
            f = np.array(f, dtype=np.complex128).reshape(-1)
            if f.shape != (n,):
                raise ProfileMismatchError(f"factor {a} has length {f.size}, expected {n}")
            norm = np.linalg.norm(f)
            if abs(norm - 1) > UNIT_TOL:
                raise InvariantError(f"factor {a} has norm {norm:.15g}, expected 1")
            f.flags.writeable = False
            frozen.append(f)
        object.__setattr__(self, "factors", tuple(frozen))

    def ket(self) -> np.ndarray:
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.kron(out, f)
        return out


@dataclass(frozen=True)
class WernerParams:
    profile: DimensionProfile
    s: float

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise InvariantError(f"mixing weight s={self.s} outside [0, 1]")
        if len(set(self.profile.dims)) != 1:
            raise InvariantError(f"Werner family needs equal factor dims, got {list(self.profile.dims)}")


def _weight(v: complex) -> float:
    """``|v|^2`` as ``re*re + im*im`` in scalar arithmetic."""
    re, im = float(v.real), float(v.imag)
    return re * re + im * im


def diagonal_index(profile: DimensionProfile, j: int) -> int:
    """Composite index of ``|j j ... j>``."""
    return profile.composite_index([j] * profile.parties)


def basis_vector(n: int, j: int) -> np.ndarray:
    e = np.zeros(n, dtype=np.complex128)
    e[j] = 1.0
    return e


def make_schmidt_vector(profile: DimensionProfile, coeffs, normalize: bool = False) -> SchmidtVector:
    v = np.array(coeffs, dtype=np.complex128).reshape(-1)
    n1 = profile.dims[0]
    if v.size != n1:
        raise InvariantError(f"expected {n1} coefficients for dims {list(profile.dims)}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise InvariantError("coefficients contain NaN or Inf")
    norm2 = float(np.sum(np.abs(v) ** 2))
    if norm2 == 0.0:
        raise InvariantError("all coefficients are zero")
    if not normalize and abs(norm2 - 1) > NORM_TOL:
        raise InvariantError(f"sum |v_j|^2 = {norm2:.15g} differs from 1 by more than {NORM_TOL}")
    v = v / np.sqrt(norm2)
    weights = np.array([_weight(z) for z in v])
    j0 = int(np.argmax(weights))
    if weights[j0] > 1 - PRODUCT_TOL:
        raise InvariantError("state is a product state: a single coefficient carries all the weight")
    v.flags.writeable = False
    return SchmidtVector(profile, v, j0)


def schmidt_state(profile: DimensionProfile, coeffs, normalize: bool = False) -> tuple[SchmidtVector, DensityMatrix]:
    """Build ``psi`` from its Schmidt-form coefficients and return its projector.

    ``coeffs`` must have ``n_1`` entries with ``sum |v_j|^2 = 1`` to within
    ``1e-9``; the vector is then renormalized exactly. Pass
    ``normalize=True`` to accept any nonzero vector.
    """
    sv = make_schmidt_vector(profile, coeffs, normalize=normalize)
    return sv, sv.projector()


def maximally_entangled(profile: DimensionProfile) -> tuple[SchmidtVector, DensityMatrix]:
    if len(set(profile.dims)) != 1:
        raise InvariantError(f"maximally entangled state needs equal dims, got {list(profile.dims)}")
    n = profile.dims[0]
    return schmidt_state(profile, np.full(n, 1 / np.sqrt(n)))


def ghz(parties: int, n: int = 2) -> tuple[SchmidtVector, DensityMatrix]:
    return maximally_entangled(DimensionProfile((n,) * parties))


def product_projector(factors: ProductFactors) -> DensityMatrix:
    """``A_1 (x) ... (x) A_p`` with ``A_a = |a_a><a_a|``."""
    projs = [np.outer(f, f.conj()) for f in factors.factors]
    return DensityMatrix(factors.profile, tensor_all(projs, cap=factors.profile.cap))


def closest_product_factors(sv: SchmidtVector) -> ProductFactors:
    """Factors of ``S_psi = |j0 ... j0><j0 ... j0|``."""
    j0 = sv.dominant_index
    return ProductFactors(sv.profile, tuple(basis_vector(n, j0) for n in sv.profile.dims))


def far_product_factors(profile: DimensionProfile) -> ProductFactors:
    """Factors of ``R = |0 ... 0 1><0 ... 0 1|``, orthogonal to every Schmidt-form state."""
    dims = profile.dims
    fs = [basis_vector(n, 0) for n in dims[:-1]] + [basis_vector(dims[-1], 1)]
    return ProductFactors(profile, tuple(fs))


def werner(params: WernerParams, e: DensityMatrix) -> DensityMatrix:
    """``(1 - s) I/N + s e``."""
    if e.profile != params.profile:
        raise ProfileMismatchError(f"profile {list(e.dims)} does not match {list(params.profile.dims)}")
    n = params.profile.total
    s = params.s
    mat = (1 - s) * np.eye(n, dtype=np.complex128) / n + s * e.mat
    return DensityMatrix(params.profile, mat)


def remark_werner_weight(n: int, parties: int) -> float:
    """Mixing weight ``1/(1 + n^(p-1))`` of the separability boundary on the Werner line."""
    return 1.0 / (1.0 + n ** (parties - 1))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``psi = sum_j coeffs[j] * left[:, j] (x) right[:, j]``.

    Coefficients are nonnegative and descending; phases live in the bases.
    """

    profile: DimensionProfile
    coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        psi = np.zeros(self.profile.total, dtype=np.complex128)
        for j, c in enumerate(self.coeffs):
            psi += c * np.kron(self.left[:, j], self.right[:, j])
        return psi

    def schmidt_vector(self) -> SchmidtVector:
        """Coefficients as a :class:`SchmidtVector`; raises for product inputs."""
        return make_schmidt_vector(self.profile, self.coeffs)

    def local_unitaries(self) -> tuple[np.ndarray, np.ndarray]:
        """Unitaries mapping computational basis vectors onto the Schmidt bases.

        ``(U1 (x) U2) |j j>`` equals ``left[:, j] (x) right[:, j]`` for ``j < n_1``.
        """
        return _complete_unitary(self.left), _complete_unitary(self.right)


def _complete_unitary(cols: np.ndarray) -> np.ndarray:
    n, k = cols.shape
    if k == n:
        return cols.copy()
    q, _ = np.linalg.qr(np.hstack([cols, np.eye(n, dtype=np.complex128)]))
    # keep the given columns exactly; QR may flip their phases
    q[:, :k] = cols
    return q


def schmidt_decompose(psi, profile: DimensionProfile) -> SchmidtDecomposition:
    """Schmidt decomposition of a bipartite pure state via the SVD of its coefficient matrix."""
    if profile.parties != 2:
        raise InvariantError(f"Schmidt decomposition needs a bipartite profile, got {list(profile.dims)}")
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if psi.size != profile.total:
        raise ProfileMismatchError(f"vector length {psi.size} does not match N={profile.total}")
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise InvariantError("zero vector has no Schmidt decomposition")
    if abs(norm - 1) > NORM_TOL:
        raise InvariantError(f"vector norm {norm:.15g} differs from 1")
    n1, n2 = profile.dims
    u, s, vh = np.linalg.svd(psi.reshape(n1, n2), full_matrices=False)
    return SchmidtDecomposition(profile, s, u, vh.T)


def local_conjugate(rho: DensityMatrix, unitaries: Sequence) -> DensityMatrix:
    """``U rho U^dagger`` with ``U = U_1 (x) ... (x) U_p``."""
    dims = rho.dims
    if len(unitaries) != len(dims):
        raise ProfileMismatchError(f"expected {len(dims)} local unitaries, got {len(unitaries)}")
    for a, (u, n) in enumerate(zip(unitaries, dims)):
        u = np.asarray(u)
        if u.shape != (n, n):
            raise ProfileMismatchError(f"unitary {a} has shape {u.shape}, expected {(n, n)}")
        if not np.allclose(u.conj().T @ u, np.eye(n), atol=1e-10):
            raise InvariantError(f"local operator {a} is not unitary")
    big = tensor_all(list(unitaries), cap=rho.profile.cap)
    m = big @ rho.mat @ big.conj().T
    return DensityMatrix(rho.profile, (m + m.conj().T) / 2)


def schmidt_from_json(obj: dict) -> SchmidtVector:
    if "dims" not in obj or "coeffs" not in obj:
        raise InvariantError("Schmidt JSON requires 'dims' and 'coeffs' keys")
    coeffs = []
    for entry in obj["coeffs"]:
        if isinstance(entry, (int, float)) and not isinstance(entry, bool):
            coeffs.append(complex(entry))
        elif isinstance(entry, list) and len(entry) == 2:
            coeffs.append(complex(float(entry[0]), float(entry[1])))
        else:
            raise InvariantError(f"coefficient must be [re, im], got {entry!r}")
    return make_schmidt_vector(DimensionProfile(tuple(obj["dims"])), coeffs)
