"""Noise channels that push a reference state toward the sandwich.

Channels are affine maps on density matrices. Global depolarizing noise moves
the state along the Werner line; the two local kinds act on a single factor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import prod
from typing import Iterable

import numpy as np

from .linalg import DensityMatrix, InvariantError, hs_inner
from .states import SchmidtVector
from .witness import classify_value

BISECT_TOL = 1e-10
# a gap this small at full strength is rounding in the coefficients, not signal
ENDPOINT_TOL = 1e-12


class ChannelKind(str, enum.Enum):
    GLOBAL_DEPOLARIZING = "global-depolarizing"
    LOCAL_DEPHASING = "local-dephasing"
    LOCAL_DEPOLARIZING = "local-depolarizing"

    @property
    def is_local(self) -> bool:
        return self is not ChannelKind.GLOBAL_DEPOLARIZING


class NoCrossingError(ValueError):
    """The witness value does not cross the threshold on ``[0, 1]``."""


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind
    strength: float
    target_factor: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not 0.0 <= self.strength <= 1.0:
            raise InvariantError(f"channel strength {self.strength} outside [0, 1]")
        if self.kind.is_local and self.target_factor is None:
            raise InvariantError(f"{self.kind.value} needs a target factor")
        if not self.kind.is_local and self.target_factor is not None:
            raise InvariantError("global depolarizing takes no target factor")


def _dephase(mat, dims, alpha, lam):
    n = dims[alpha]
    inner = prod(dims[alpha + 1:])
    idx = np.arange(prod(dims))
    local = (idx // inner) % n
    scale = np.where(local[:, None] == local[None, :], 1.0, 1.0 - lam)
    return mat * scale


def _local_depolarize(mat, dims, alpha, lam):
    p = len(dims)
    t = mat.reshape(dims + dims)
    reduced = np.trace(t, axis1=alpha, axis2=p + alpha)  # factor alpha traced out
    n = dims[alpha]
    eye = np.eye(n) / n
    # reduced has axes (others..., others...); put I/n back at position alpha
    mixed = np.multiply.outer(reduced, eye)
    src_ket = list(range(p - 1))
    src_bra = list(range(p - 1, 2 * p - 2))
    order = src_ket[:alpha] + [2 * p - 2] + src_ket[alpha:] + src_bra[:alpha] + [2 * p - 1] + src_bra[alpha:]
    mixed = np.transpose(mixed, order).reshape(mat.shape)
    return (1 - lam) * mat + lam * mixed


def apply_channel(q: DensityMatrix, spec: ChannelSpec) -> DensityMatrix:
    dims = q.dims
    lam = spec.strength
    mat = np.asarray(q.mat)
    if spec.kind.is_local and not 0 <= spec.target_factor < len(dims):
        raise InvariantError(f"target factor {spec.target_factor} out of range for {len(dims)} factors")
    if spec.kind is ChannelKind.GLOBAL_DEPOLARIZING:
        n = q.profile.total
        out = (1 - lam) * mat + lam * np.eye(n) / n
    elif spec.kind is ChannelKind.LOCAL_DEPHASING:
        out = _dephase(mat, dims, spec.target_factor, lam)
    else:
        out = _local_depolarize(mat, dims, spec.target_factor, lam)
    return DensityMatrix(q.profile, 0.5 * (out + out.conj().T))


def witness_value_under(sv: SchmidtVector, kind: ChannelKind | str, strength: float,
                        target: int | None = None) -> float:
    e = sv.projector()
    noisy = apply_channel(e, ChannelSpec(kind, strength, target))
    return float(hs_inner(noisy.mat, e.mat).real)


def crossing_strength(sv: SchmidtVector, kind: ChannelKind | str, target: int | None = None,
                      tol: float = BISECT_TOL) -> float:
    """Smallest strength at which the witness stops certifying entanglement.

    The witness gap ``Tr(Q E_psi) - max|v_j|^2`` of the noisy reference is
    bisected on ``[0, 1]``. The bracket must show the sign change: positive
    at 0 and nonpositive at 1, where a gap within ``ENDPOINT_TOL`` of zero
    counts as touching the threshold.

    Raises
    ------
    NoCrossingError
        If the gap is already nonpositive at strength 0 or still positive at 1.
    """
    kind = ChannelKind(kind)
    t = sv.threshold

    def gap(lam):
        return witness_value_under(sv, kind, lam, target) - t

    g0, g1 = gap(0.0), gap(1.0)
    if g0 <= 0:
        raise NoCrossingError(f"witness gap already {g0:.3e} at strength 0")
    if g1 > ENDPOINT_TOL:
        raise NoCrossingError(f"witness gap still {g1:.3e} at strength 1; no crossing in [0, 1]")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep(sv: SchmidtVector, kind: ChannelKind | str, strengths: Iterable[float],
          target: int | None = None, margin: float = 0.0) -> list[tuple[float, float, str]]:
    """Rows ``(lambda, witness_value, classification)`` for plotting."""
    t = sv.threshold
    rows = []
    for lam in strengths:
        value = witness_value_under(sv, kind, float(lam), target)
        rows.append((float(lam), value, classify_value(value, t, margin).value))
    return rows


def sweep_csv(rows) -> str:
    lines = ["lambda,witness_value,classification"]
    lines += [f"{lam!r},{value!r},{cls}" for lam, value, cls in rows]
    return "\n".join(lines) + "\n"
