"""Self-test suite: every advertised guarantee of the package, re-derived.

Each check is an independent verifier: closed-form values recomputed by
brute force, invariants sampled with seeded RNG loops, thresholds recovered
by bisection against the named state families.  The CLI selftest command and
the acceptance tests both run these, so a green selftest is the package's
operational definition of "working".

Checks accept quick=True to subsample (about 100 seeds) for a fast smoke
run; tolerances stay identical, only sample counts and grid resolutions
shrink.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import criteria, datamatrix, operators, oracles, transforms

SETTING_AXES = {"x": operators.sigma_x, "y": operators.sigma_y, "z": operators.sigma_z}


def pauli_family(settings: str) -> operators.MeasurementFamily:
    """Measurement family from an axis string like "xyz" or "xz"."""
    if not settings or any(ch not in SETTING_AXES for ch in settings):
        raise ValueError(f"pauli_family: settings must be drawn from 'xyz', got {settings!r}")
    if len(set(settings)) != len(settings):
        raise ValueError(f"pauli_family: repeated axis in {settings!r}")
    return operators.MeasurementFamily(
        tuple(operators.DichotomicObservable(SETTING_AXES[ch]) for ch in settings)
    )


def werner_data_matrix(p: float, settings: str = "xyz") -> datamatrix.DataMatrix:
    fam = pauli_family(settings)
    return datamatrix.from_state(operators.werner_state(p), fam, fam)


_BFP_BASE: datamatrix.DataMatrix | None = None


def bfp_data_matrix(p: float) -> datamatrix.DataMatrix:
    """Data matrix of the noisy bound-entangled family under the 15 product
    Pauli settings.

    White noise scales every traceless-observable expectation by (1 - p) and
    leaves the identity corner at 1, so the matrix is built once at p = 0 and
    mixed affinely afterwards.
    """
    global _BFP_BASE
    if _BFP_BASE is None:
        fam = operators.product_pauli_family()
        _BFP_BASE = datamatrix.from_state(operators.bfp_state(0.0), fam, fam)
    corner = np.zeros((16, 16))
    corner[0, 0] = 1.0
    return datamatrix.DataMatrix((1.0 - p) * _BFP_BASE.mat + p * corner)


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    detail: str
    elapsed: float


def _result(check_id: str, start: float, failures: list, detail: str) -> CheckResult:
    if failures:
        detail = "; ".join(str(f) for f in failures[:5])
        if len(failures) > 5:
            detail += f"; and {len(failures) - 5} more"
    return CheckResult(check_id, not failures, detail, time.time() - start)


def check_example_reproduction(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    sep, ent = operators.example_states()
    unsharp = operators.example_unsharp_family()
    sharp = operators.example_sharp_family()
    target = np.array(operators.example_data_values())

    produced = datamatrix.from_state(sep, unsharp, unsharp)
    err = float(np.max(np.abs(produced.mat - target)))
    if err > 1e-12:
        failures.append(f"separable-state reproduction off by {err:.3e} (> 1e-12)")

    err_ent = float(np.max(np.abs(datamatrix.from_state(ent, sharp, sharp).mat - target)))
    if err_ent > 1e-12:
        failures.append(f"entangled-state reproduction off by {err_ent:.3e}")
    if operators.ppt_check(ent, (2, 2))[0]:
        failures.append("the entangled example state is PPT, so it cannot be entangled")

    D = datamatrix.DataMatrix(target)
    v_sharp = criteria.certify(D, criteria.SHARP_NONORTHOGONAL)
    l1 = (15.0 - 8.0 * math.sqrt(3.0)) / 2.0
    formula = math.sqrt(l1) + math.sqrt(0.5) - math.sqrt(2.0)
    if v_sharp.status != criteria.ENTANGLED:
        failures.append(f"sharp verdict is {v_sharp.status}, expected entangled")
    if abs(v_sharp.margin - formula) > 1e-6:
        failures.append(f"sharp margin {v_sharp.margin:.9f} != {formula:.9f} +- 1e-6")

    v_unsharp = criteria.certify(D, criteria.UNSHARP_ORTHOGONAL)
    if v_unsharp.status != criteria.SEPARABLE_MODEL:
        failures.append(f"unsharp verdict is {v_unsharp.status}, expected separable-model-exists")
    elif v_unsharp.witness is None or v_unsharp.witness.reproduction_error > 1e-9:
        failures.append("unsharp verdict lacks a verified witness")

    return _result(
        "example-reproduction",
        start,
        failures,
        f"reproduction {err:.1e}; sharp margin {v_sharp.margin:.7f}; unsharp witnessed",
    )


def check_werner_thresholds(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    thr_det = oracles.threshold_bisection(
        lambda p: werner_data_matrix(p, "xyz"),
        lambda D: criteria.det_criterion(D, 2),
        0.0,
        1.0,
    )
    if abs(thr_det - 2.0 / 3.0) > 1e-6:
        failures.append(f"determinant threshold {thr_det:.8f} != 2/3 +- 1e-6")
    thr_ccnr = oracles.threshold_bisection(
        lambda p: werner_data_matrix(p, "xz"),
        lambda D: criteria.ccnr_corollary(D.mat),
        0.0,
        1.0,
    )
    if abs(thr_ccnr - 0.5) > 1e-6:
        failures.append(f"trace-norm threshold {thr_ccnr:.8f} != 0.5 +- 1e-6")
    return _result(
        "werner-thresholds",
        start,
        failures,
        f"det {thr_det:.7f} (2/3), trace-norm {thr_ccnr:.7f} (1/2)",
    )


def check_bound_entangled(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    is_ppt, low = operators.ppt_check(operators.bfp_state(0.0), (4, 4))
    if not is_ppt:
        failures.append(f"noiseless state is not PPT (min eigenvalue {low:.3e})")
    for p in (0.0, 0.2, 0.39):
        v = criteria.det_criterion(bfp_data_matrix(p), 4)
        expect = ((1.0 - p) / 3.0) ** 15
        rel = abs(v.value - expect) / expect
        if rel > 1e-10:
            failures.append(f"|det| at p={p} off by {rel:.2e} relative (> 1e-10)")
        if v.status != criteria.ENTANGLED:
            failures.append(f"p={p} not detected (status {v.status})")
    thr = oracles.threshold_bisection(
        bfp_data_matrix, lambda D: criteria.det_criterion(D, 4), 0.0, 1.0
    )
    if abs(thr - 0.4) > 1e-6:
        failures.append(f"threshold {thr:.8f} != 0.4 +- 1e-6")
    return _result(
        "bound-entangled-detection",
        start,
        failures,
        f"PPT at p=0, det matches closed form, threshold {thr:.7f}",
    )


def check_lemma_oracles(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    count = 40 if quick else 400
    rng = np.random.default_rng(20240811)
    worst1 = 0.0
    for _ in range(count):
        l1 = float(rng.uniform(0.02, 1.0))
        l2 = float(rng.uniform(0.0, l1))
        got = oracles.lemma1_oracle(l1, l2)
        want = 0.25 * (math.sqrt(l1) + math.sqrt(l2)) ** 4
        rel = abs(got - want) / want
        worst1 = max(worst1, rel)
        if rel > 1e-5:
            failures.append(f"frame-angle minimum at ({l1:.4f},{l2:.4f}) off by {rel:.2e}")
    worst2 = 0.0
    for _ in range(count):
        draw = rng.integers(0, 3)
        if draw == 0:
            vals = np.sort(rng.uniform(0.0, 1.0, 3))[::-1]
        elif draw == 1:
            a = rng.uniform(0.1, 1.0)
            vals = np.array([a, a, rng.uniform(0.0, a)])
        else:
            a = rng.uniform(0.1, 1.0)
            vals = np.array([a, rng.uniform(0.0, a), 0.0])
        l0, l1, l2 = (float(x) for x in vals)
        got = oracles.lemma2_oracle(l0, l1, l2)
        want = l0 + l1 + l2
        rel = abs(got - want) / max(want, 1e-12)
        worst2 = max(worst2, rel)
        if rel > 1e-5:
            failures.append(f"product-constraint minimum at ({l0:.4f},{l1:.4f},{l2:.4f}) off by {rel:.2e}")
    return _result(
        "lemma-oracles",
        start,
        failures,
        f"{count} tuples each; worst rel {worst1:.1e} / {worst2:.1e}",
    )


def check_transform_inequalities(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    count = 100 if quick else 10000
    rng = np.random.default_rng(715)
    slack = 1e-9
    worst = 0.0
    for i in range(count):
        block = rng.uniform(-1.0, 1.0, size=(2, 2))
        lam = datamatrix.singular_values(block)
        l1, l2 = float(lam[0]), float(lam[1])

        alpha, beta = rng.uniform(0.02, math.pi / 2.0 - 0.02, size=2)
        T2 = transforms.rotation_block(alpha) @ block @ transforms.rotation_block(beta).T
        t = datamatrix.singular_values(T2)
        a = np.sort([math.sqrt(2.0) * math.cos(alpha), math.sqrt(2.0) * math.sin(alpha)])[::-1]
        b = np.sort([math.sqrt(2.0) * math.cos(beta), math.sqrt(2.0) * math.sin(beta)])[::-1]

        lhs = float(t[0] * t[1])
        rhs = l1 * l2 / (a[0] * a[1] * b[0] * b[1])
        gap = abs(lhs - rhs) / max(1.0, rhs)
        worst = max(worst, gap)
        if gap > slack:
            failures.append(f"instance {i}: product identity off by {gap:.2e}")

        lhs = float(t[0] ** 2 + t[1] ** 2)
        rhs = (l1 + l2) ** 2 / float(a[0] ** 2 * b[0] ** 2 + a[1] ** 2 * b[1] ** 2)
        if lhs < rhs - slack * max(1.0, rhs):
            failures.append(f"instance {i}: square-sum bound violated by {rhs - lhs:.2e}")

        x1, x3 = rng.uniform(-2.0, 2.0, size=2)
        x2 = 1.0 + abs(x1) + rng.uniform(0.0, 1.5)
        x4 = 1.0 + abs(x3) + rng.uniform(0.0, 1.5)
        y1, y3 = rng.uniform(-2.0, 2.0, size=2)
        y2 = 1.0 + abs(y1) + rng.uniform(0.0, 1.5)
        y4 = 1.0 + abs(y3) + rng.uniform(0.0, 1.5)
        Sx = transforms.sharpener_matrix((x1, x2, x3, x4))
        Sy = transforms.sharpener_matrix((y1, y2, y3, y4))
        D3 = np.eye(3)
        D3[1:, 1:] = block
        t3 = datamatrix.singular_values(Sx @ D3 @ Sy.T)
        scale = max(1.0, l1, l1 * l2)
        if t3[0] < 1.0 - slack:
            failures.append(f"instance {i}: leading singular value {t3[0]:.12f} < 1")
        if t3[0] * t3[1] < l1 - slack * scale:
            failures.append(f"instance {i}: two-product bound violated")
        if t3[0] * t3[1] * t3[2] < l1 * l2 - slack * scale:
            failures.append(f"instance {i}: three-product bound violated")
    return _result(
        "transform-inequalities",
        start,
        failures,
        f"{count} rotated + sharpened instances; worst identity gap {worst:.1e}",
    )


def check_orthonormalization_bounds(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    count = 100 if quick else 10000
    rng = np.random.default_rng(90210)
    combos = [(d, n) for d in (2, 3, 4) for n in (2, 3)]
    min_qutrit = math.inf
    for i in range(count):
        d, n = combos[i % len(combos)]
        fam = operators.MeasurementFamily(tuple(oracles.random_observable(rng, d) for _ in range(n)))
        det = abs(float(np.linalg.det(transforms.gram_schmidt(fam).transform)))
        bound = d ** (-(n + 1) / 2.0)
        if det < bound - 1e-12:
            failures.append(f"sample {i} (d={d}, n={n}): |det G| {det:.6e} below {bound:.6e}")
        if d == 3 and n == 2:
            min_qutrit = min(min_qutrit, det)
            if det < math.sqrt(3.0) / 8.0 - 1e-12:
                failures.append(f"sample {i}: qutrit two-setting |det G| {det:.6e} below sqrt(3)/8")
    fam = operators.MeasurementFamily(
        (operators.DichotomicObservable(operators.sigma_x), operators.DichotomicObservable(operators.sigma_z))
    )
    det = abs(float(np.linalg.det(transforms.gram_schmidt(fam).transform)))
    if abs(det - 2.0 ** -1.5) > 1e-12:
        failures.append(f"equality case |det G| {det!r} != 2^-3/2 within 1e-12")
    return _result(
        "orthonormalization-determinant-bounds",
        start,
        failures,
        f"{count} families; min qutrit two-setting det {min_qutrit:.6f} vs sqrt(3)/8 = {math.sqrt(3)/8:.6f}",
    )


_SOUNDNESS_SCENARIOS = (
    criteria.SHARP_ORTHOGONAL,
    criteria.SHARP_NONORTHOGONAL,
    criteria.UNSHARP_ORTHOGONAL,
    criteria.QUBIT_UNCHARACTERIZED,
)


def check_soundness(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    count = 100 if quick else 1000
    for scenario in _SOUNDNESS_SCENARIOS:
        for seed in range(count):
            rng = np.random.default_rng((hash(scenario.kind) & 0xFFFF) * 100000 + seed)
            rho = oracles.random_separable_state(seed * 7 + 1, d=2, k=int(rng.integers(1, 5)))
            fam_a = oracles.random_scenario_family(rng, scenario.kind)
            fam_b = oracles.random_scenario_family(rng, scenario.kind)
            D = datamatrix.from_state(rho, fam_a, fam_b)
            v = criteria.certify(D, scenario)
            if v.status == criteria.ENTANGLED:
                failures.append(
                    f"{scenario.kind} seed {seed}: separable state certified (margin {v.margin:.3e})"
                )
    for d in (2, 3):
        for seed in range(count):
            rng = np.random.default_rng(5000000 * d + seed)
            n = int(rng.integers(2, 4))
            rho = oracles.random_separable_state(seed * 13 + 3, d=d, k=int(rng.integers(1, 5)))
            fam_a = operators.MeasurementFamily(tuple(oracles.random_observable(rng, d) for _ in range(n)))
            fam_b = operators.MeasurementFamily(tuple(oracles.random_observable(rng, d) for _ in range(n)))
            D = datamatrix.from_state(rho, fam_a, fam_b)
            v = criteria.det_criterion(D, d, scan=True)
            if v.status == criteria.ENTANGLED:
                failures.append(f"dimension d={d} seed {seed}: separable state certified")
    return _result(
        "soundness-no-false-positives",
        start,
        failures,
        f"{count} separable states per scenario class and per dimension, zero false certifications",
    )


def _boundary_curve(column: int, l1: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        if column in (0, 2):
            return 1.0 - l1
        if column in (1, 3):
            return (math.sqrt(2.0) - np.sqrt(l1)) ** 2
        if column == 4:
            return 0.25 / l1
        return (64.0 / 81.0) / l1


def check_beyond_bell_region(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    D = datamatrix.DataMatrix(np.diag([1.0, 0.7, 0.4]))
    v = criteria.certify(D, criteria.QUBIT_UNCHARACTERIZED)
    chsh = criteria.chsh_max(D)
    if v.status != criteria.ENTANGLED:
        failures.append(f"diag(1,0.7,0.4) not certified (status {v.status})")
    if abs(v.margin - 0.1) > 1e-9:
        failures.append(f"margin {v.margin!r} != 0.1")
    if abs(chsh - 1.1) > 1e-12 or chsh > 2.0:
        failures.append(f"chsh maximum {chsh!r}, expected 1.1 <= 2")

    resolution = 128 if quick else 512
    rows = criteria.region_rows(resolution)
    axis = np.linspace(0.0, 1.0, resolution)
    cell = 1.0 / (resolution - 1)
    flags = rows[:, 2:].reshape(resolution, resolution, 6)
    worst_dev = 0.0
    for col in range(6):
        curve = _boundary_curve(col, axis)
        for i in range(resolution):
            row = flags[i, :, col] > 0.5
            l2_star = curve[i]
            if not row.any():
                if l2_star <= 1.0 - cell - 1e-12:
                    failures.append(
                        f"column {col}, l1={axis[i]:.4f}: no detection though boundary at {l2_star:.4f}"
                    )
                continue
            j = int(np.argmax(row))
            if not row[j:].all():
                failures.append(f"column {col}, l1={axis[i]:.4f}: detection region not upward-closed")
                continue
            dev = abs(axis[j] - l2_star)
            worst_dev = max(worst_dev, dev)
            if dev > cell + 1e-12:
                failures.append(
                    f"column {col}, l1={axis[i]:.4f}: boundary at {axis[j]:.4f} vs analytic {l2_star:.4f}"
                )
    return _result(
        "beyond-bell-region",
        start,
        failures,
        f"margin 0.1, chsh 1.1; {resolution}x{resolution} grid, worst boundary deviation "
        f"{worst_dev:.5f} <= cell {cell:.5f}",
    )


def check_separable_fitter(quick: bool = False) -> CheckResult:
    start = time.time()
    failures = []
    count = 50 if quick else 200
    rng = np.random.default_rng(31337)
    worst = 0.0
    for i in range(count):
        s1 = float(rng.uniform(0.0, 1.0))
        s2 = float(rng.uniform(0.0, min(s1, 1.0 - s1)))
        ta, tb = rng.uniform(0.0, 2.0 * math.pi, size=2)
        ra = np.array([[math.cos(ta), -math.sin(ta)], [math.sin(ta), math.cos(ta)]])
        rb = np.array([[math.cos(tb), -math.sin(tb)], [math.sin(tb), math.cos(tb)]])
        if rng.integers(0, 2):
            ra = ra @ np.diag([1.0, -1.0])
        if rng.integers(0, 2):
            rb = rb @ np.diag([1.0, -1.0])
        block = ra @ np.diag([s1, s2]) @ rb.T
        witness = oracles.fit_separable_model(block)
        worst = max(worst, witness.reproduction_error)
        if witness.reproduction_error > 1e-9:
            failures.append(f"sample {i}: reproduction error {witness.reproduction_error:.2e}")
        if not operators.ppt_check(witness.state, (2, 2))[0]:
            failures.append(f"sample {i}: fitted state is not PPT")
    try:
        oracles.fit_separable_model(np.diag([0.7, 0.4]))
        failures.append("fitter accepted a block with singular-value sum 1.1")
    except ValueError:
        pass
    return _result(
        "separable-fitter",
        start,
        failures,
        f"{count} random blocks; worst reproduction error {worst:.1e}",
    )


CHECKS = {
    "example-reproduction": check_example_reproduction,
    "werner-thresholds": check_werner_thresholds,
    "bound-entangled-detection": check_bound_entangled,
    "lemma-oracles": check_lemma_oracles,
    "transform-inequalities": check_transform_inequalities,
    "orthonormalization-determinant-bounds": check_orthonormalization_bounds,
    "soundness-no-false-positives": check_soundness,
    "beyond-bell-region": check_beyond_bell_region,
    "separable-fitter": check_separable_fitter,
}


def run_check(check_id: str, quick: bool = False) -> CheckResult:
    if check_id not in CHECKS:
        raise ValueError(f"run_check: unknown check {check_id!r}; known: {sorted(CHECKS)}")
    return CHECKS[check_id](quick=quick)


def run_all(quick: bool = False, only: tuple[str, ...] | None = None) -> list[CheckResult]:
    ids = only if only is not None else tuple(CHECKS)
    return [run_check(cid, quick=quick) for cid in ids]
