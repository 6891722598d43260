"""Witness threshold, sandwich hyperplanes and the bipartition bound kappa.

Every separable state ``T`` satisfies ``Tr(T E_psi) <= max_j |v_j|^2``.
Both hyperplanes are perpendicular to the line from ``I/N`` to ``E_psi``:
the near plane passes through the closest product projector ``S_psi``, the
far plane through every projector orthogonal to ``E_psi``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod, sqrt
from typing import Sequence

import numpy as np

from .linalg import DensityMatrix, DimensionProfile, InvariantError, ProfileMismatchError, hs_inner
from .states import SchmidtVector, local_conjugate, make_schmidt_vector

MAX_KAPPA_PARTIES = 20


class Classification(str, enum.Enum):
    ENTANGLED = "ENTANGLED"
    INCONCLUSIVE = "INCONCLUSIVE"


class Region(str, enum.Enum):
    """Position of a state relative to the sandwich."""

    BEYOND_NEAR = "BEYOND_NEAR"  # strictly past the near plane: entangled
    INSIDE = "INSIDE"  # on either plane or between them
    BEYOND_FAR = "BEYOND_FAR"  # impossible for a valid state


@dataclass(frozen=True)
class WitnessVerdict:
    value: float
    threshold: float
    classification: Classification
    margin: float = 0.0

    @property
    def entangled(self) -> bool:
        return self.classification is Classification.ENTANGLED

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "threshold": self.threshold,
            "classification": self.classification.value,
            "margin": self.margin,
        }


def closest_product_distance(sv: SchmidtVector) -> float:
    """Frobenius distance from ``E_psi`` to its nearest pure product projector."""
    return sqrt(2.0 * (1.0 - sv.threshold))


def classify_value(value: float, threshold: float, margin: float = 0.0) -> Classification:
    # equality stays inconclusive: the near plane contains the product state S_psi
    if value > threshold + margin:
        return Classification.ENTANGLED
    return Classification.INCONCLUSIVE


def witness_check(q: DensityMatrix, sv: SchmidtVector, margin: float = 0.0,
                  frame: Sequence | None = None) -> WitnessVerdict:
    """Test ``Tr(q E_psi) > max_j |v_j|^2``.

    Parameters
    ----------
    q : DensityMatrix
        State under test.
    sv : SchmidtVector
        Reference entangled state.
    margin : float
        Extra slack required above the threshold before declaring entanglement.
    frame : sequence of ndarray, optional
        Local unitaries ``U_1..U_p``; the reference becomes ``U E_psi U^dagger``.
    """
    if q.profile != sv.profile:
        raise ProfileMismatchError(f"state dims {list(q.dims)} do not match reference dims {list(sv.profile.dims)}")
    e = sv.projector()
    if frame is not None:
        e = local_conjugate(e, frame)
    value = float(hs_inner(q.mat, e.mat).real)
    threshold = sv.threshold
    return WitnessVerdict(value, threshold, classify_value(value, threshold, margin), margin)


@dataclass(frozen=True, eq=False)
class Sandwich:
    """Two parallel hyperplanes bounding every separable state.

    Offsets are signed projections of ``X - I/N`` onto the unit normal
    ``(E_psi - I/N) / ||E_psi - I/N||``.
    """

    reference: SchmidtVector
    normal: np.ndarray
    c_offset: float
    f_offset: float
    threshold: float

    @property
    def thickness(self) -> float:
        return self.c_offset - self.f_offset

    @property
    def total(self) -> int:
        return self.reference.profile.total

    def signed_projection(self, q) -> float | np.ndarray:
        """Signed projection of ``q - I/N``; accepts a DensityMatrix or a stack of matrices."""
        mat = q.mat if isinstance(q, DensityMatrix) else np.asarray(q)
        # <q - I/N, normal> = <q, normal> since the normal is traceless
        out = hs_inner(np.broadcast_to(self.normal, mat.shape), mat)
        return float(np.real(out)) if np.ndim(out) == 0 else np.real(out)

    def region(self, q, tol: float = 0.0) -> Region:
        x = self.signed_projection(q)
        if x > self.c_offset + tol:
            return Region.BEYOND_NEAR
        if x < self.f_offset - tol:
            return Region.BEYOND_FAR
        return Region.INSIDE

    def to_json(self) -> dict:
        return {
            "dims": list(self.reference.profile.dims),
            "threshold": self.threshold,
            "c_offset": self.c_offset,
            "f_offset": self.f_offset,
            "thickness": self.thickness,
        }


def build_sandwich(sv: SchmidtVector) -> Sandwich:
    n = sv.profile.total
    e = sv.projector().mat
    direction = e - np.eye(n) / n
    norm = sqrt(hs_inner(direction, direction).real)
    normal = direction / norm
    normal.flags.writeable = False
    scale = sqrt(n / (n - 1))
    t = sv.threshold
    return Sandwich(
        reference=sv,
        normal=normal,
        c_offset=(t - 1.0 / n) * scale,
        f_offset=-(1.0 / n) * scale,
        threshold=t,
    )


@dataclass(frozen=True)
class KappaResult:
    """Outcome of the bipartition search.

    ``best_partition`` holds two tuples of 0-based factor indices; the first
    contains index 0.
    """

    dims: tuple[int, ...]
    kappa: Fraction
    best_partition: tuple[tuple[int, ...], tuple[int, ...]]

    @property
    def total(self) -> int:
        return prod(self.dims)

    @property
    def thickness_bound(self) -> float:
        n = self.total
        return float(self.kappa) * sqrt(n / (n - 1))

    @property
    def split_dims(self) -> tuple[int, int]:
        a, b = self.best_partition
        return prod(self.dims[i] for i in a), prod(self.dims[i] for i in b)

    def to_json(self) -> dict:
        a, b = self.best_partition
        return {
            "dims": list(self.dims),
            "kappa": str(self.kappa),
            "kappa_float": float(self.kappa),
            "best_partition": [list(a), list(b)],
            "thickness_bound": self.thickness_bound,
        }


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    if isinstance(dims, DimensionProfile):
        return dims.dims
    dims = tuple(int(d) for d in dims)
    if not 2 <= len(dims) <= MAX_KAPPA_PARTIES:
        raise InvariantError(f"number of factors must be in [2, {MAX_KAPPA_PARTIES}], got {len(dims)}")
    if min(dims) < 2:
        raise InvariantError(f"every factor dimension must be >= 2, got {list(dims)}")
    return dims


def kappa(dims: Sequence[int] | DimensionProfile) -> KappaResult:
    """Bipartition bound ``kappa = 1 / max_pi min(N_1(pi), N_2(pi))``.

    The most balanced bipartition gives the thinnest universal sandwich.
    Candidates are enumerated as subsets containing factor 0, in
    lexicographic order of their index tuples; the first maximizer wins.
    """
    dims = _check_dims(dims)
    p = len(dims)
    total = prod(dims)
    rest = range(1, p)
    best_f = 0
    best = None
    candidates = []
    for k in range(0, p - 1):
        for extra in itertools.combinations(rest, k):
            candidates.append((0,) + extra)
    for subset in sorted(candidates):
        n1 = prod(dims[i] for i in subset)
        f = min(n1, total // n1)
        if f > best_f:
            best_f, best = f, subset
    complement = tuple(i for i in range(p) if i not in best)
    return KappaResult(dims, Fraction(1, best_f), (best, complement))


def universal_sandwich_gap(dims: Sequence[int] | DimensionProfile) -> float:
    """Distance ``kappa * sqrt(N/(N-1))`` between planes enclosing all separable states."""
    return kappa(dims).thickness_bound


def best_bipartition_reference(dims: Sequence[int] | DimensionProfile) -> SchmidtVector:
    """Maximally entangled state across the best bipartition, on profile ``(N_1, N_2)``."""
    res = kappa(dims)
    n1, n2 = sorted(res.split_dims)
    profile = DimensionProfile((n1, n2))
    return make_schmidt_vector(profile, np.full(n1, 1 / np.sqrt(n1)))


def depolarizing_threshold(sv: SchmidtVector) -> float:
    """Largest noise weight ``lam`` keeping ``(1-lam) E_psi + lam I/N`` beyond the near plane."""
    n = sv.profile.total
    return (1.0 - sv.threshold) * n / (n - 1)


def depolarizing_threshold_bisect(sv: SchmidtVector, tol: float = 1e-12) -> float:
    """Bisection on the witness value along the depolarizing line; verifies the closed form."""
    n = sv.profile.total
    t = sv.threshold

    def gap(lam):
        return (1.0 - lam) + lam / n - t

    lo, hi = 0.0, 1.0
    if not (gap(lo) > 0 >= gap(hi)):
        raise InvariantError("no sign change of the witness gap on [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
