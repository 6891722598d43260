"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints under
"acceptance criteria". The assertion runs after recording, so a failure is
both reported and counted.
"""

import json
import time
from fractions import Fraction

import numpy as np

from entsandwich.channels import crossing_strength
from entsandwich.cli import main
from entsandwich.linalg import DimensionProfile, dumps, frobenius_distance, hs_inner
from entsandwich.oracles import (
    SamplerConfig,
    audit_separable,
    factorization_check,
    max_product_overlap,
    sample_product_state,
    survey_sandwich,
)
from entsandwich.states import (
    WernerParams,
    closest_product_factors,
    maximally_entangled,
    product_projector,
    remark_werner_weight,
    schmidt_state,
    werner,
)
from entsandwich.witness import kappa

from conftest import random_schmidt

OVERLAP_PROFILES = [(2, 2), (3, 3), (4, 4), (2, 2, 2), (3, 3, 3), (2, 3, 4)]


def test_criterion_1_kappa(record_acceptance, capsys):
    start = time.perf_counter()
    code = main(["kappa", "2", "3", "4", "30"])
    worked = json.loads(capsys.readouterr().out)["kappa"]
    qubits = {p: kappa((2,) * p).kappa for p in range(2, 13)}
    elapsed = time.perf_counter() - start
    wrong = [p for p, k in qubits.items() if k != Fraction(1, 2 ** (p // 2))]
    passed = code == 0 and worked == "1/24" and not wrong and elapsed < 1.0
    record_acceptance("1 kappa reproduction", passed,
                      f"kappa(2,3,4,30)={worked}, qubit mismatches={wrong}, {elapsed:.3f}s")
    assert passed


def test_criterion_2_overlap_equivalence(record_acceptance):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_overlap = worst_dist = 0.0
    unconverged = 0
    for k in range(50):
        prof = DimensionProfile(OVERLAP_PROFILES[k % len(OVERLAP_PROFILES)])
        sv = random_schmidt(prof, rng)
        e = sv.projector()
        # the oracle sees only the matrix, never the coefficients
        res = max_product_overlap(e, SamplerConfig(seed=k))
        unconverged += not res.converged
        t = float(np.max(np.abs(sv.coeffs) ** 2))
        worst_overlap = max(worst_overlap, abs(res.value - t))
        s = product_projector(closest_product_factors(sv))
        worst_dist = max(worst_dist, abs(frobenius_distance(e.mat, s.mat) - np.sqrt(2 * (1 - t))))
    elapsed = time.perf_counter() - start
    passed = worst_overlap <= 1e-7 and worst_dist <= 1e-12 and elapsed < 60
    record_acceptance("2 closest-product equivalence", passed,
                      f"max overlap err={worst_overlap:.2e}, max distance err={worst_dist:.2e}, "
                      f"unconverged={unconverged}, {elapsed:.1f}s")
    assert passed


def test_criterion_3_separable_soundness(record_acceptance):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    details, violations = [], 0
    for i, dims in enumerate([(2, 2), (2, 3), (2, 2, 2)]):
        sv = random_schmidt(DimensionProfile(dims), rng)
        audit = audit_separable(sv, SamplerConfig(seed=300 + i, sample_count=100_000), tol=1e-9)
        below = audit.min_value < -1e-9
        above = audit.max_value > sv.threshold + 1e-9
        violations += audit.violations + below + above
        details.append(f"{'x'.join(map(str, dims))}: [{audit.min_value:.3g}, {audit.max_value:.6f}] "
                       f"vs t={sv.threshold:.6f}")
    elapsed = time.perf_counter() - start
    passed = violations == 0 and elapsed < 300
    record_acceptance("3 separable soundness", passed, f"violations={violations}; " + "; ".join(details)
                      + f"; {elapsed:.1f}s")
    assert passed


def test_criterion_4_werner_boundary(record_acceptance):
    errors = []
    for n in range(2, 7):
        prof = DimensionProfile((n, n))
        _, e = maximally_entangled(prof)
        s = remark_werner_weight(n, 2)
        assert s == 1 / (1 + n)
        w = werner(WernerParams(prof, s), e)
        errors.append(abs(hs_inner(w.mat, e.mat).real - 1 / n))
    prof = DimensionProfile((2, 2, 2))
    _, e = maximally_entangled(prof)
    s = remark_werner_weight(2, 3)
    ghz_value = hs_inner(werner(WernerParams(prof, s), e).mat, e.mat).real
    passed = max(errors) <= 1e-12 and s == 1 / 5 and ghz_value < 0.5
    record_acceptance("4 Werner boundary", passed,
                      f"max bipartite err={max(errors):.2e}, GHZ value at s=1/5: {ghz_value:.6f} < 0.5")
    assert passed


def test_criterion_5_depolarizing_crossing(record_acceptance):
    rng = np.random.default_rng(505)
    worst = 0.0
    for k in range(20):
        prof = DimensionProfile(OVERLAP_PROFILES[k % len(OVERLAP_PROFILES)])
        sv = random_schmidt(prof, rng)
        n = prof.total
        closed = (1 - float(np.max(np.abs(sv.coeffs) ** 2))) * n / (n - 1)
        worst = max(worst, abs(crossing_strength(sv, "global-depolarizing") - closed))
    bell, _ = maximally_entangled(DimensionProfile((2, 2)))
    bell_err = abs(crossing_strength(bell, "global-depolarizing") - 2 / 3)
    passed = worst <= 1e-9 and bell_err <= 1e-9
    record_acceptance("5 depolarizing crossing", passed, f"max err={worst:.2e}, Bell err={bell_err:.2e}")
    assert passed


def test_criterion_6_peres_cross_validation(record_acceptance):
    rng = np.random.default_rng(606)
    refs = [
        maximally_entangled(DimensionProfile((2, 2)))[0],
        schmidt_state(DimensionProfile((2, 3)), [1 / np.sqrt(2), 1 / np.sqrt(2)])[0],
    ]
    details, bad = [], 0
    for i, sv in enumerate(refs):
        survey = survey_sandwich(sv, SamplerConfig(seed=600 + i, sample_count=100_000))
        sep = audit_separable(random_schmidt(sv.profile, rng),
                              SamplerConfig(seed=700 + i, sample_count=100_000), check_ppt=True)
        bad += survey.soundness_counterexamples + sep.npt_count
        details.append(f"{'x'.join(map(str, sv.profile.dims))}: {survey.outside_count} ENTANGLED "
                       f"({survey.soundness_counterexamples} PPT), separable NPT={sep.npt_count}")
    passed = bad == 0
    record_acceptance("6 Peres cross-validation", passed, "; ".join(details))
    assert passed


def test_criterion_7_survey_reproducible(record_acceptance, tmp_path, capsys):
    ref = tmp_path / "bell.json"
    main(["gen", "bell", "--out", str(ref)])
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        code = main(["survey", str(ref), "--samples", "100000", "--seed", "77", "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    capsys.readouterr()
    report = json.loads(outs[0])
    lo, hi = report["confidence_interval_95"]
    in_process = dumps(survey_sandwich(maximally_entangled(DimensionProfile((2, 2)))[0],
                                       SamplerConfig(seed=77, sample_count=100_000), workers=4).to_json())
    passed = (outs[0] == outs[1] and outs[0] == in_process.encode()
              and report["fraction_defined"] and lo <= report["fraction_entangled_inside"] <= hi)
    record_acceptance("7 survey reproducibility", passed,
                      f"fraction={report['fraction_entangled_inside']:.4f} CI95=[{lo:.4f}, {hi:.4f}], "
                      f"byte-identical={outs[0] == outs[1]}")
    assert passed


def test_criterion_8_proof_chain(record_acceptance):
    rng = np.random.default_rng(808)
    profiles = [DimensionProfile(d) for d in OVERLAP_PROFILES]
    failures = 0
    for k in range(10_000):
        prof = profiles[k % len(profiles)]
        try:
            factorization_check(random_schmidt(prof, rng), sample_product_state(prof, rng))
        except AssertionError:
            failures += 1
    worst_tight = 0.0
    for prof in profiles:
        for _ in range(5):
            sv = random_schmidt(prof, rng)
            fac = factorization_check(sv, closest_product_factors(sv))
            worst_tight = max(worst_tight, max(fac.links) - min(fac.links))
    passed = failures == 0 and worst_tight <= 1e-10
    record_acceptance("8 proof chain", passed, f"failures={failures}/10000, max spread at S_psi={worst_tight:.2e}")
    assert passed
