"""Command-line interface.

Machine-readable output goes to stdout (or ``--out``); diagnostics go to
stderr. Exit codes: 0 success / ENTANGLED, 1 error, 3 INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .channels import ChannelKind, NoCrossingError, crossing_strength, sweep, sweep_csv
from .linalg import (
    DensityMatrix,
    DimensionProfile,
    InvariantError,
    ProfileMismatchError,
    density_from_json,
    density_to_json,
    dumps,
    frobenius_distance,
    hs_inner,
)
from .oracles import (
    ProofChainError,
    SamplerConfig,
    audit_separable,
    factorization_check,
    max_product_overlap,
    sample_product_state,
    survey_sandwich,
)
from .states import (
    SchmidtVector,
    WernerParams,
    closest_product_factors,
    make_schmidt_vector,
    maximally_entangled,
    product_projector,
    remark_werner_weight,
    schmidt_from_json,
    schmidt_state,
    werner,
)
from .witness import (
    Classification,
    build_sandwich,
    closest_product_distance,
    depolarizing_threshold,
    kappa,
    witness_check,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 3


class CLIError(Exception):
    pass


def _diag(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIError(f"parse error in {path}: {exc.msg} at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(obj, dict):
        raise CLIError(f"parse error in {path}: top-level value must be an object")
    return obj


def load_reference(path: str) -> SchmidtVector:
    obj = _read_json(path)
    if "coeffs" not in obj:
        raise CLIError(f"{path}: reference must be a Schmidt-form file with 'dims' and 'coeffs'")
    return schmidt_from_json(obj)


def load_state(path: str) -> DensityMatrix:
    """Matrix JSON, or a Schmidt-form file (converted to its projector)."""
    obj = _read_json(path)
    if "coeffs" in obj:
        return schmidt_from_json(obj).projector()
    return density_from_json(obj)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(out))
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, out)


def _report(payload: dict, **provenance) -> str:
    body = {"tool_version": __version__}
    body.update(provenance)
    body.update(payload)
    return dumps(body)


# -- subcommands -----------------------------------------------------------


def cmd_witness(args) -> int:
    q = load_state(args.state)
    sv = load_reference(args.reference)
    margin = args.tolerance if args.tolerance is not None else 0.0
    verdict = witness_check(q, sv, margin=margin)
    _emit(_report(verdict.to_json()), args.out)
    _diag(f"Tr(Q E) = {verdict.value:.12g}, threshold = {verdict.threshold:.12g}: {verdict.classification.value}")
    return EXIT_OK if verdict.entangled else EXIT_INCONCLUSIVE


def cmd_sandwich(args) -> int:
    sv = load_reference(args.reference)
    sw = build_sandwich(sv)
    payload = sw.to_json()
    if args.state:
        q = load_state(args.state)
        if q.profile != sv.profile:
            raise ProfileMismatchError(f"state dims {list(q.dims)} do not match reference dims {list(sv.profile.dims)}")
        tol = args.tolerance if args.tolerance is not None else 0.0
        payload["state"] = {"signed_projection": sw.signed_projection(q), "region": sw.region(q, tol).value}
    _emit(_report(payload), args.out)
    return EXIT_OK


def cmd_kappa(args) -> int:
    dims = args.dims
    if len(dims) < 2:
        raise CLIError("usage: kappa N1 N2 [N3 ...] (at least two factor dimensions)")
    res = kappa(dims)
    _emit(_report(res.to_json()), args.out)
    _diag(f"kappa = {res.kappa}, gap = {res.thickness_bound:.12g}")
    return EXIT_OK


def cmd_closest_product(args) -> int:
    sv = load_reference(args.reference)
    e = sv.projector()
    s = product_projector(closest_product_factors(sv))
    payload = {
        "dims": list(sv.profile.dims),
        "threshold": sv.threshold,
        "distance": closest_product_distance(sv),
        "distance_to_s_psi": frobenius_distance(e.mat, s.mat),
    }
    seed = None
    if args.oracle:
        seed = args.seed
        res = max_product_overlap(sv, SamplerConfig(seed=seed))
        payload["oracle"] = {"value": res.value, "converged": res.converged, "sweeps": res.sweeps}
    _emit(_report(payload, seed=seed), args.out)
    return EXIT_OK


def cmd_robustness(args) -> int:
    sv = load_reference(args.reference)
    kind = ChannelKind(args.channel)
    target = args.target if kind.is_local else None
    if kind.is_local and target is None:
        target = 0
    steps = max(args.steps, 2)
    rows = sweep(sv, kind, np.linspace(0.0, 1.0, steps), target)
    if args.format == "csv":
        _emit(sweep_csv(rows), args.out)
        return EXIT_OK
    try:
        crossing = crossing_strength(sv, kind, target)
        note = None
    except NoCrossingError as exc:
        crossing, note = None, str(exc)
    payload = {
        "dims": list(sv.profile.dims),
        "channel": kind.value,
        "target_factor": target,
        "threshold": sv.threshold,
        "crossing_strength": crossing,
        "no_crossing": note,
        "closed_form_global": depolarizing_threshold(sv),
        "sweep": [{"lambda": lam, "witness_value": v, "classification": c} for lam, v, c in rows],
    }
    _emit(_report(payload), args.out)
    return EXIT_OK


def cmd_survey(args) -> int:
    sv = load_reference(args.reference)
    cfg = SamplerConfig(seed=args.seed, sample_count=args.samples if args.samples is not None else 10_000)
    report = survey_sandwich(sv, cfg, workers=args.workers, keep_rows=args.format == "csv")
    if args.format == "csv":
        _emit("\n".join(report.csv_rows()) + "\n", args.out)
    else:
        _emit(dumps(report.to_json()), args.out)
    frac = report.fraction_entangled_inside
    _diag(f"inside: {report.in_sandwich_count}, entangled inside: {report.entangled_in_sandwich_count}, "
          f"fraction: {'undefined' if frac is None else f'{frac:.4f}'}")
    return EXIT_OK


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "bell":
        sv, _ = maximally_entangled(DimensionProfile((2, 2)))
        text = dumps(sv.to_json())
    elif kind == "ghz":
        sv, _ = maximally_entangled(DimensionProfile((2,) * args.parties))
        text = dumps(sv.to_json())
    elif kind == "maximally-entangled":
        sv, _ = maximally_entangled(DimensionProfile(_need_dims(args)))
        text = dumps(sv.to_json())
    elif kind == "schmidt":
        if not args.coeffs:
            raise CLIError("gen schmidt needs --coeffs")
        sv, _ = schmidt_state(DimensionProfile(_need_dims(args)), [float(c) for c in args.coeffs], normalize=True)
        text = dumps(sv.to_json())
    elif kind == "maximally-mixed":
        text = dumps(density_to_json(DensityMatrix.maximally_mixed(DimensionProfile(_need_dims(args)))))
    elif kind == "werner":
        profile = DimensionProfile(_need_dims(args))
        _, e = maximally_entangled(profile)
        s = args.s if args.s is not None else remark_werner_weight(profile.dims[0], profile.parties)
        text = dumps(density_to_json(werner(WernerParams(profile, s), e)))
    else:  # pragma: no cover - argparse restricts choices
        raise CLIError(f"unknown generator {kind}")
    _emit(text, args.out)
    return EXIT_OK


def _need_dims(args) -> tuple[int, ...]:
    if not args.dims:
        raise CLIError(f"gen {args.kind} needs --dims")
    return tuple(args.dims)


# -- verify suites ---------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    observed: dict


def _random_sv(profile: DimensionProfile, rng: np.random.Generator) -> SchmidtVector:
    n1 = profile.dims[0]
    z = rng.standard_normal(n1) + 1j * rng.standard_normal(n1)
    return make_schmidt_vector(profile, z, normalize=True)


THEOREM1_PROFILES = [(2, 2), (3, 3), (4, 4), (2, 2, 2), (3, 3, 3), (2, 3, 4)]


def suite_theorem1(seed: int, samples: int | None, tol: float | None) -> list[Check]:
    tol = 1e-7 if tol is None else tol
    count = 2 if samples is None else samples
    rng = np.random.default_rng(seed)
    checks = []
    for dims in THEOREM1_PROFILES:
        profile = DimensionProfile(dims)
        for k in range(count):
            sv = _random_sv(profile, rng)
            res = max_product_overlap(sv, SamplerConfig(seed=int(rng.integers(2**31))))
            e = sv.projector()
            s = product_projector(closest_product_factors(sv))
            d_err = abs(frobenius_distance(e.mat, s.mat) - closest_product_distance(sv))
            err = abs(res.value - sv.threshold)
            checks.append(Check(f"theorem1 {'x'.join(map(str, dims))} #{k}",
                                err <= tol and d_err <= 1e-12 and res.converged,
                                {"closed_form": sv.threshold, "oracle": res.value, "overlap_error": err,
                                 "distance_error": d_err}))
    return checks


def suite_theorem2(seed: int, samples: int | None, tol: float | None) -> list[Check]:
    tol = 1e-9 if tol is None else tol
    count = 10_000 if samples is None else samples
    rng = np.random.default_rng(seed)
    checks = []
    for dims in [(2, 2), (2, 3), (2, 2, 2)]:
        profile = DimensionProfile(dims)
        sv = _random_sv(profile, rng)
        audit = audit_separable(sv, SamplerConfig(seed=int(rng.integers(2**31)), sample_count=count), tol=tol)
        checks.append(Check(f"theorem2-sandwich {'x'.join(map(str, dims))}",
                            audit.violations == 0 and audit.entangled_verdicts == 0,
                            {"threshold": sv.threshold, **audit.to_json()}))
    return checks


def suite_remark3(seed: int, samples: int | None, tol: float | None) -> list[Check]:
    tol = 1e-12 if tol is None else tol
    checks = []
    for n in range(2, 7):
        profile = DimensionProfile((n, n))
        _, e = maximally_entangled(profile)
        s = remark_werner_weight(n, 2)
        w = werner(WernerParams(profile, s), e)
        err = abs(hs_inner(w.mat, e.mat).real - 1.0 / n)
        checks.append(Check(f"remark3-werner n={n}", err <= tol, {"s": s, "error": err}))
    profile = DimensionProfile((2, 2, 2))
    _, e = maximally_entangled(profile)
    s = remark_werner_weight(2, 3)
    value = hs_inner(werner(WernerParams(profile, s), e).mat, e.mat).real
    checks.append(Check("remark3-werner ghz p=3 inside sandwich", value < 0.5, {"s": s, "value": value}))
    return checks


def suite_factorization(seed: int, samples: int | None, tol: float | None) -> list[Check]:
    tol = 1e-10 if tol is None else tol
    count = 10_000 if samples is None else samples
    rng = np.random.default_rng(seed)
    profiles = [DimensionProfile(d) for d in THEOREM1_PROFILES]
    failures = 0
    worst_slack = np.inf
    for k in range(count):
        profile = profiles[k % len(profiles)]
        sv = _random_sv(profile, rng)
        try:
            fac = factorization_check(sv, sample_product_state(profile, rng), tol=tol)
            worst_slack = min(worst_slack, fac.operator_bound - fac.trace_overlap)
        except ProofChainError:
            failures += 1
    checks = [Check("factorization chain on random pairs", failures == 0,
                    {"pairs": count, "failures": failures, "min_slack": float(worst_slack)})]
    tight_err = 0.0
    for profile in profiles:
        sv = _random_sv(profile, rng)
        fac = factorization_check(sv, closest_product_factors(sv), tol=tol)
        tight_err = max(tight_err, fac.operator_bound - fac.trace_overlap)
    checks.append(Check("factorization tight at S_psi", tight_err <= tol, {"max_gap": tight_err}))
    return checks


SUITES: dict[str, Callable] = {
    "theorem1": suite_theorem1,
    "theorem2-sandwich": suite_theorem2,
    "remark3-werner": suite_remark3,
    "factorization": suite_factorization,
}


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise CLIError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = SUITES[args.suite](args.seed, args.samples, args.tolerance)
    for c in checks:
        _diag(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {json.dumps(c.observed, sort_keys=True)}")
    payload = {
        "suite": args.suite,
        "samples": args.samples,
        "tolerance": args.tolerance,
        "all_passed": all(c.passed for c in checks),
        "checks": [{"name": c.name, "passed": c.passed, "observed": c.observed} for c in checks],
    }
    _emit(_report(payload, seed=args.seed), args.out)
    return EXIT_OK if payload["all_passed"] else EXIT_ERROR


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root RNG seed")
    common.add_argument("--samples", type=int, default=None, help="sample budget")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--tolerance", type=float, default=None,
                        help="decision margin (witness, sandwich) or comparison tolerance (verify)")
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="entsandwich", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("witness", parents=[common], help="test a state against a reference witness")
    p.add_argument("state")
    p.add_argument("reference")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("sandwich", parents=[common], help="sandwich planes of a reference state")
    p.add_argument("reference")
    p.add_argument("--state", default=None)
    p.set_defaults(func=cmd_sandwich)

    p = sub.add_parser("kappa", parents=[common], help="bipartition bound and universal gap")
    p.add_argument("dims", type=int, nargs="+")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("closest-product", parents=[common], help="distance to the nearest product projector")
    p.add_argument("reference")
    p.add_argument("--oracle", action="store_true", help="also run the alternating-ascent oracle")
    p.set_defaults(func=cmd_closest_product)

    p = sub.add_parser("robustness", parents=[common], help="noise sweep and witness crossing")
    p.add_argument("reference")
    p.add_argument("--channel", choices=[k.value for k in ChannelKind], default=ChannelKind.GLOBAL_DEPOLARIZING.value)
    p.add_argument("--target", type=int, default=None, help="factor index for local channels")
    p.add_argument("--steps", type=int, default=21)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("survey", parents=[common], help="entangled fraction inside the sandwich (2x2, 2x3)")
    p.add_argument("reference")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("verify", parents=[common], help="run an oracle property suite")
    p.add_argument("suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", parents=[common], help="write a state file")
    p.add_argument("kind", choices=["bell", "ghz", "maximally-entangled", "schmidt", "maximally-mixed", "werner"])
    p.add_argument("--dims", type=int, nargs="+", default=None)
    p.add_argument("--parties", type=int, default=3)
    p.add_argument("--coeffs", nargs="+", default=None)
    p.add_argument("--s", type=float, default=None, help="Werner mixing weight")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        _diag(f"error: {exc}")
    except ProfileMismatchError as exc:
        _diag(f"profile mismatch: {exc}")
    except (InvariantError, NoCrossingError) as exc:
        _diag(f"invariant violation: {exc}")
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
