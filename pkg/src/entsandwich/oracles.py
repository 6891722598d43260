"""Numerical oracles that check the witness independently of its closed forms.

All randomness flows from :class:`SamplerConfig.seed`. Batch samplers split
the work into fixed-size chunks, each with its own child seed spawned from
the root seed, so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import __version__
from .linalg import (
    DensityMatrix,
    DimensionProfile,
    InvariantError,
    ProfileMismatchError,
    hermitian_eig,
    hs_inner,
)
from .states import ProductFactors, SchmidtVector, product_projector
from .witness import Classification, build_sandwich, classify_value

NPT_TOL = 1e-10
CHAIN_TOL = 1e-10
SURVEY_PROFILES = {(2, 2), (2, 3)}


class ProofChainError(AssertionError):
    """A link of the overlap bound failed; indicates an implementation bug."""


@dataclass(frozen=True)
class SamplerConfig:
    """Budget and seed for every sampler.

    ``mixture_rank=None`` means ``N**2`` product terms per separable mixture.
    """

    seed: int = 0
    sample_count: int = 1000
    mixture_rank: int | None = None
    restarts: int = 32
    max_sweeps: int = 5000
    tol: float = 1e-10
    chunk_size: int = 1000

    def __post_init__(self):
        if self.sample_count < 0:
            raise InvariantError("sample_count must be >= 0")
        if self.mixture_rank is not None and self.mixture_rank < 1:
            raise InvariantError("mixture_rank must be positive")
        if self.restarts < 1 or self.max_sweeps < 1 or self.chunk_size < 1:
            raise InvariantError("restarts, max_sweeps and chunk_size must be positive")

    def rank_for(self, profile: DimensionProfile) -> int:
        return self.mixture_rank if self.mixture_rank is not None else profile.total ** 2

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "sample_count": self.sample_count,
            "mixture_rank": self.mixture_rank,
            "restarts": self.restarts,
            "max_sweeps": self.max_sweeps,
            "tol": self.tol,
            "chunk_size": self.chunk_size,
        }


def chunk_generators(seed: int, total: int, chunk_size: int) -> list[tuple[int, np.random.Generator]]:
    """Split ``total`` draws into chunks with one independent generator each."""
    nchunks = -(-total // chunk_size) if total else 0
    children = np.random.SeedSequence(seed).spawn(nchunks)
    out = []
    for i, child in enumerate(children):
        count = min(chunk_size, total - i * chunk_size)
        out.append((count, np.random.default_rng(child)))
    return out


def _map_chunks(fn, chunks, workers: int):
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


# -- samplers --------------------------------------------------------------


def _unit_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def sample_product_state(profile: DimensionProfile, rng: np.random.Generator) -> ProductFactors:
    """Independent rotation-invariant unit vector on every factor."""
    return ProductFactors(profile, tuple(_unit_gaussian(rng, (n,)) for n in profile.dims))


def product_kets(dims: Sequence[int], rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Stack of random product kets with shape ``shape + (N,)``."""
    out = None
    for n in dims:
        f = _unit_gaussian(rng, shape + (n,))
        out = f if out is None else (out[..., :, None] * f[..., None, :]).reshape(shape + (-1,))
    return out


def separable_batch(profile: DimensionProfile, rank: int, count: int,
                    rng: np.random.Generator) -> np.ndarray:
    """``count`` separable mixtures of ``rank`` product projectors, simplex-uniform weights."""
    kets = product_kets(profile.dims, rng, (count, rank))
    w = rng.dirichlet(np.ones(rank), size=count)
    t = np.einsum("sr,sri,srj->sij", w, kets, kets.conj())
    t = 0.5 * (t + np.swapaxes(t.conj(), -1, -2))
    tr = np.einsum("sii->s", t).real
    return t / tr[:, None, None]


def sample_separable_mixture(profile: DimensionProfile, cfg: SamplerConfig,
                             rng: np.random.Generator | None = None) -> DensityMatrix:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    return DensityMatrix(profile, separable_batch(profile, cfg.rank_for(profile), 1, rng)[0])


def hs_batch(profile: DimensionProfile, count: int, rng: np.random.Generator) -> np.ndarray:
    """Density matrices ``G G^dagger / Tr(G G^dagger)`` with complex Gaussian ``G``."""
    n = profile.total
    g = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    rho = g @ np.swapaxes(g.conj(), -1, -2)
    rho = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
    tr = np.einsum("sii->s", rho).real
    return rho / tr[:, None, None]


def sample_hs_state(profile: DimensionProfile, rng: np.random.Generator) -> DensityMatrix:
    return DensityMatrix(profile, hs_batch(profile, 1, rng)[0])


# -- alternating maximization ---------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _contraction_spec(p: int, mu: int) -> str:
    ket = _LETTERS[:p]
    bra = _LETTERS[p:2 * p].upper()
    ops = [ket + bra]
    for b in range(p):
        if b != mu:
            ops += [ket[b], bra[b]]
    return ",".join(ops) + "->" + ket[mu] + bra[mu]


def partial_contraction(t: np.ndarray, xs: Sequence[np.ndarray], mu: int) -> np.ndarray:
    """``<x_others| E |x_others>`` as an operator on factor ``mu``.

    ``t`` is the target matrix reshaped to ``dims + dims``.
    """
    p = len(xs)
    operands = [t]
    for b in range(p):
        if b != mu:
            operands += [xs[b].conj(), xs[b]]
    m = np.einsum(_contraction_spec(p, mu), *operands)
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class OverlapResult:
    value: float
    argmax: ProductFactors
    converged: bool
    sweeps: int
    history: tuple[float, ...] = field(repr=False)


def _ascend(t, xs, max_sweeps, tol):
    p = len(xs)
    xs = list(xs)
    history = []
    prev = None
    for sweep in range(1, max_sweeps + 1):
        for mu in range(p):
            w, v = hermitian_eig(partial_contraction(t, xs, mu))
            x = v[:, 0]
            xs[mu] = x / np.linalg.norm(x)
            value = float(w[0])
        history.append(value)
        if prev is not None and value - prev < tol:
            return xs, value, True, sweep, history
        prev = value
    return xs, value, False, max_sweeps, history


def max_product_overlap(target: SchmidtVector | DensityMatrix, cfg: SamplerConfig) -> OverlapResult:
    """Maximize ``Tr(E A)`` over pure product projectors ``A`` by alternating ascent.

    With every factor but one fixed, the best remaining factor is the top
    eigenvector of the partial contraction of ``E`` against the others, so
    each step is an exact single-factor optimum and the objective never
    decreases. The best of ``cfg.restarts`` random starts is returned.
    """
    e = target.projector() if isinstance(target, SchmidtVector) else target
    profile = e.profile
    dims = profile.dims
    t = np.asarray(e.mat).reshape(dims + dims)
    rng = np.random.default_rng(cfg.seed)
    best = None
    for _ in range(cfg.restarts):
        start = [_unit_gaussian(rng, (n,)) for n in dims]
        xs, value, converged, sweeps, history = _ascend(t, start, cfg.max_sweeps, cfg.tol)
        if best is None or value > best[1]:
            best = (xs, value, converged, sweeps, history)
    xs, value, converged, sweeps, history = best
    return OverlapResult(value, ProductFactors(profile, tuple(xs)), converged, sweeps, tuple(history))


# -- proof-chain check -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class OverlapFactorization:
    """Intermediate quantities of the overlap bound for one product state.

    ``r[mu, j] = |a_{mu j}|`` for ``j < n_1``; ``beta = r[0]``,
    ``rho = prod_{mu > 0} r[mu]``; ``phi = sum_j conj(v_j) a_{1j}...a_{pj}``.
    """

    v_diag: np.ndarray
    rho: np.ndarray
    beta: np.ndarray
    r: np.ndarray
    phi: complex
    trace_overlap: float
    modulus_sum: float
    cauchy_schwarz_bound: float
    operator_bound: float

    @property
    def links(self) -> tuple[float, ...]:
        """Successive terms of the chain, each bounded by the next."""
        return (self.trace_overlap, abs(self.phi) ** 2, self.modulus_sum ** 2,
                self.cauchy_schwarz_bound, self.operator_bound)

    def is_tight(self, tol: float = CHAIN_TOL) -> bool:
        return abs(self.trace_overlap - self.operator_bound) <= tol


def factorization_check(sv: SchmidtVector, factors: ProductFactors, tol: float = CHAIN_TOL) -> OverlapFactorization:
    """Evaluate and assert every link of the bound ``Tr(E_psi A) <= max_j |v_j|^2``.

    Raises
    ------
    ProofChainError
        If any link fails by more than ``tol``.
    """
    if factors.profile != sv.profile:
        raise ProfileMismatchError("factors and reference live on different profiles")
    n1 = sv.profile.dims[0]
    a = np.array([f[:n1] for f in factors.factors])
    r = np.abs(a)
    v = np.asarray(sv.coeffs)
    v_diag = np.abs(v)
    beta = r[0]
    rho = np.prod(r[1:], axis=0)
    phi = complex(np.sum(v.conj() * np.prod(a, axis=0)))

    trace = float(hs_inner(sv.projector().mat, product_projector(factors).mat).real)
    modulus_sum = float(np.sum(v_diag * r.prod(axis=0)))
    inner = float(rho @ (v_diag * beta))
    v_op2 = float(np.max(v_diag) ** 2)
    cs = float(rho @ rho) * v_op2 * float(beta @ beta)

    checks = [
        ("Tr(E A) = |phi|^2", abs(trace - abs(phi) ** 2) <= tol),
        ("|phi|^2 <= (sum |v_j| r_1j...r_pj)^2", abs(phi) ** 2 <= modulus_sum ** 2 + tol),
        ("sum |v_j| r_1j...r_pj = <rho, V beta>", abs(modulus_sum - inner) <= tol),
        ("<rho, V beta>^2 <= |rho|^2 |V|^2 |beta|^2", inner ** 2 <= cs + tol),
        ("|beta| = 1", abs(float(beta @ beta) - 1) <= tol),
        ("|rho| <= 1", float(rho @ rho) <= 1 + tol),
        ("|V|_op^2 = |v_j0|^2", abs(v_op2 - sv.threshold) <= tol),
        ("|rho|^2 |V|^2 |beta|^2 <= |v_j0|^2", cs <= sv.threshold + tol),
    ]
    failed = [name for name, ok in checks if not ok]
    if failed:
        raise ProofChainError(f"overlap bound violated: {', '.join(failed)}")
    return OverlapFactorization(v_diag, rho, beta, r, phi, trace, modulus_sum, cs, sv.threshold)


# -- partial transpose -----------------------------------------------------


def partial_transpose(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Transpose on the second factor of a bipartite operator; leading axes are batch axes."""
    n1, n2 = dims
    m = np.asarray(m)
    batch = m.shape[:-2]
    t = m.reshape(batch + (n1, n2, n1, n2))
    t = np.swapaxes(t, -1, -3)
    return t.reshape(batch + (n1 * n2, n1 * n2))


@dataclass(frozen=True)
class PPTResult:
    min_eigenvalue: float
    is_npt: bool


def ppt_check(q: DensityMatrix) -> PPTResult:
    if q.profile.parties != 2:
        raise InvariantError(f"partial transpose test needs a bipartite profile, got {list(q.dims)}")
    lam = float(np.linalg.eigvalsh(partial_transpose(q.mat, q.dims))[0])
    return PPTResult(lam, lam < -NPT_TOL)


def min_pt_eigenvalues(stack: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    return np.linalg.eigvalsh(partial_transpose(stack, dims))[..., 0]


# -- separable audit -------------------------------------------------------


@dataclass(frozen=True)
class SeparableAudit:
    """Extremes of witness value and sandwich projection over separable samples."""

    samples: int
    min_value: float
    max_value: float
    min_projection: float
    max_projection: float
    violations: int
    entangled_verdicts: int
    npt_count: int | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def audit_separable(sv: SchmidtVector, cfg: SamplerConfig, check_ppt: bool = False,
                    workers: int = 1, tol: float = 1e-9) -> SeparableAudit:
    """Draw ``cfg.sample_count`` separable mixtures and test them against the sandwich."""
    profile = sv.profile
    if check_ppt and profile.parties != 2:
        raise InvariantError("PPT audit needs a bipartite profile")
    e = sv.projector().mat
    sw = build_sandwich(sv)
    t = sv.threshold
    rank = cfg.rank_for(profile)

    def run(chunk):
        count, rng = chunk
        stack = separable_batch(profile, rank, count, rng)
        values = hs_inner(np.broadcast_to(e, stack.shape), stack).real
        proj = sw.signed_projection(stack)
        bad = int(np.sum((values < -tol) | (values > t + tol)
                         | (proj < sw.f_offset - tol) | (proj > sw.c_offset + tol)))
        ent = sum(classify_value(float(x), t) is Classification.ENTANGLED for x in values)
        npt = int(np.sum(min_pt_eigenvalues(stack, profile.dims) < -NPT_TOL)) if check_ppt else None
        return values.min(), values.max(), proj.min(), proj.max(), bad, ent, npt

    parts = _map_chunks(run, chunk_generators(cfg.seed, cfg.sample_count, cfg.chunk_size), workers)
    if not parts:
        return SeparableAudit(0, float("nan"), float("nan"), float("nan"), float("nan"), 0, 0,
                              0 if check_ppt else None)
    return SeparableAudit(
        samples=cfg.sample_count,
        min_value=float(min(p[0] for p in parts)),
        max_value=float(max(p[1] for p in parts)),
        min_projection=float(min(p[2] for p in parts)),
        max_projection=float(max(p[3] for p in parts)),
        violations=sum(p[4] for p in parts),
        entangled_verdicts=sum(p[5] for p in parts),
        npt_count=sum(p[6] for p in parts) if check_ppt else None,
    )


# -- sandwich survey -------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float] | None:
    if trials == 0:
        return None
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


@dataclass(frozen=True)
class SurveyReport:
    dims: tuple[int, ...]
    samples: int
    in_sandwich_count: int
    entangled_in_sandwich_count: int
    outside_count: int
    outside_npt_count: int
    seed: int
    config: SamplerConfig
    rows: tuple[tuple[float, str, float], ...] | None = None

    @property
    def fraction_entangled_inside(self) -> float | None:
        if self.in_sandwich_count == 0:
            return None
        return self.entangled_in_sandwich_count / self.in_sandwich_count

    @property
    def interval(self) -> tuple[float, float] | None:
        return wilson_interval(self.entangled_in_sandwich_count, self.in_sandwich_count)

    @property
    def soundness_counterexamples(self) -> int:
        """Samples past the near plane that are nevertheless PPT."""
        return self.outside_count - self.outside_npt_count

    def to_json(self) -> dict:
        ci = self.interval
        return {
            "tool_version": __version__,
            "dims": list(self.dims),
            "measure": "hilbert-schmidt",
            "seed": self.seed,
            "config": self.config.to_json(),
            "npt_tolerance": NPT_TOL,
            "samples": self.samples,
            "in_sandwich_count": self.in_sandwich_count,
            "entangled_in_sandwich_count": self.entangled_in_sandwich_count,
            "outside_count": self.outside_count,
            "outside_npt_count": self.outside_npt_count,
            "soundness_counterexamples": self.soundness_counterexamples,
            "fraction_entangled_inside": self.fraction_entangled_inside,
            "fraction_defined": self.fraction_entangled_inside is not None,
            "confidence_interval_95": list(ci) if ci is not None else None,
        }

    def csv_rows(self) -> Iterator[str]:
        yield "value,classification,min_pt_eigenvalue"
        for value, cls, lam in self.rows or ():
            yield f"{value!r},{cls},{lam!r}"


def survey_sandwich(sv: SchmidtVector, cfg: SamplerConfig, workers: int = 1,
                    keep_rows: bool = False) -> SurveyReport:
    """Estimate the entangled fraction of Hilbert-Schmidt samples inside the sandwich.

    Separability is decided by the partial transpose, which is exact on the
    supported profiles ``2x2`` and ``2x3``.
    """
    dims = sv.profile.dims
    if dims not in SURVEY_PROFILES:
        raise InvariantError(f"survey supports 2x2 and 2x3 only, got {'x'.join(map(str, dims))}")
    e = sv.projector().mat
    t = sv.threshold

    def run(chunk):
        count, rng = chunk
        stack = hs_batch(sv.profile, count, rng)
        values = hs_inner(np.broadcast_to(e, stack.shape), stack).real
        lam = min_pt_eigenvalues(stack, dims)
        outside = np.array([classify_value(float(x), t) is Classification.ENTANGLED for x in values], dtype=bool)
        npt = lam < -NPT_TOL
        rows = None
        if keep_rows:
            labels = np.where(outside, Classification.ENTANGLED.value, Classification.INCONCLUSIVE.value)
            rows = [(float(x), str(c), float(l)) for x, c, l in zip(values, labels, lam)]
        return (int(np.sum(~outside)), int(np.sum(~outside & npt)), int(np.sum(outside)),
                int(np.sum(outside & npt)), rows)

    parts = _map_chunks(run, chunk_generators(cfg.seed, cfg.sample_count, cfg.chunk_size), workers)
    rows = None
    if keep_rows:
        rows = tuple(r for p in parts for r in p[4])
    return SurveyReport(
        dims=dims,
        samples=cfg.sample_count,
        in_sandwich_count=sum(p[0] for p in parts),
        entangled_in_sandwich_count=sum(p[1] for p in parts),
        outside_count=sum(p[2] for p in parts),
        outside_npt_count=sum(p[3] for p in parts),
        seed=cfg.seed,
        config=cfg,
        rows=rows,
    )
