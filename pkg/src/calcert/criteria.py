"""Entanglement criteria under partial measurement knowledge.

Every rule takes measured data and an assumption about the devices and
returns a Verdict.  The assumption classes, weakest to strongest:

* qubit-uncharacterized: both devices measure some valid qubit dichotomic pair;
* unsharp-orthogonal: qubit pairs with mutually unbiased eigenbases;
* sharp-nonorthogonal: projective qubit pairs, relative angle unknown;
* sharp-orthogonal: projective qubit pairs with mutually unbiased eigenbases;
* dimension-bounded(d): any valid dichotomic observables on C^d, any count.

For two settings per side with vanishing marginals, with block singular
values l1 >= l2, the detection thresholds are l1 + l2 > 1 for the orthogonal
classes and sqrt(l1) + sqrt(l2) > sqrt(2) for the others; for fully diagonal
data the qubit assumption alone already detects at l1 + l2 > 1, although such
data satisfy every CHSH inequality.  The dimension-bounded rule compares
|det D| against (d/(n+1))^(n+1), improved to ((d-1)/n)^n when n >= d and to
64/81 for n=2, d=3; it is sufficient only, so non-detection is inconclusive.

Verdicts are strict: a criterion fires only when it clears its threshold by
the strictness tolerance eps.  Where the data themselves prove a separable
explanation exists (a fitted model reproducing them exactly under in-class
measurements), the verdict is "separable-model-exists" and carries the
re-verified witness.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import datamatrix, oracles

EPS_DEFAULT = 1e-9
DIAGONAL_TOL = 1e-9
SV_PHYSICAL_TOL = 1e-9
SCAN_CAP_DEFAULT = 20000

ENTANGLED = "entangled"
INCONCLUSIVE = "inconclusive"
SEPARABLE_MODEL = "separable-model-exists"

_QUBIT_KINDS = (
    "sharp-orthogonal",
    "sharp-nonorthogonal",
    "unsharp-orthogonal",
    "qubit-uncharacterized",
)
KINDS = _QUBIT_KINDS + ("dimension-bounded",)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Scenario:
    """A device assumption: one of KINDS, plus the dimension when bounded."""

    kind: str
    dimension: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Scenario: unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "dimension-bounded":
            if self.dimension is None or self.dimension < 2:
                raise ValueError(f"Scenario: dimension-bounded needs dimension >= 2, got {self.dimension}")
        elif self.dimension not in (None, 2):
            raise ValueError(f"Scenario: {self.kind} is a qubit assumption; dimension must be 2")


SHARP_ORTHOGONAL = Scenario("sharp-orthogonal")
SHARP_NONORTHOGONAL = Scenario("sharp-nonorthogonal")
UNSHARP_ORTHOGONAL = Scenario("unsharp-orthogonal")
QUBIT_UNCHARACTERIZED = Scenario("qubit-uncharacterized")


def dimension_bounded(d: int) -> Scenario:
    return Scenario("dimension-bounded", dimension=d)


@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of one certification rule.

    margin is value - threshold on the rule's own scale; Entangled implies
    margin > eps.  A positive margin with a non-entangled status can only
    occur on auxiliary scales (documented where used).  notes carry
    machine-readable context codes.
    """

    status: str
    criterion: str
    value: float
    threshold: float
    margin: float
    scenario: str | None = None
    witness: oracles.SeparableWitness | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        out = {
            "status": self.status,
            "criterion": self.criterion,
            "margin": self.margin,
            "threshold": self.threshold,
            "value": self.value,
        }
        if self.scenario is not None:
            out["scenario"] = self.scenario
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _sv_descending(mat: np.ndarray) -> np.ndarray:
    sv = datamatrix.singular_values(mat)
    # Snap numerical-rank noise to zero (matrix_rank tolerance): the sqrt
    # rules have infinite slope at 0, so an exactly singular block whose
    # smallest sv comes back as ~1e-17 would otherwise clear any eps.
    if sv.size:
        sv = np.where(sv < sv[0] * max(mat.shape) * np.finfo(float).eps, 0.0, sv)
    return sv


def ccnr_corollary(T: np.ndarray, eps: float = EPS_DEFAULT) -> Verdict:
    """Trace-norm test on a 3x3 sharp-orthogonal-frame correlation matrix.

    Separable states obey sum of singular values <= 2; exceeding 2 certifies
    entanglement.  When the marginals vanish and the leading singular value is
    1, failing the test is conclusive the other way: a separable model
    reproducing T exists and is attached.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (3, 3):
        raise ValueError(f"ccnr_corollary: expected a 3x3 matrix, got {T.shape}")
    if abs(T[0, 0] - 1.0) > datamatrix.MATRIX_CORNER_TOL:
        raise ValueError(f"ccnr_corollary: entry (0,0) is {T[0, 0]!r}, expected 1")
    sv = _sv_descending(T)
    total = float(sv.sum())
    margin = total - 2.0
    if margin > eps:
        return Verdict(ENTANGLED, "ccnr-sum", total, 2.0, margin)
    marginals_zero = (
        np.max(np.abs(T[1:, 0])) <= datamatrix.MARGINAL_TOL
        and np.max(np.abs(T[0, 1:])) <= datamatrix.MARGINAL_TOL
    )
    block_sum = float(_sv_descending(T[1:, 1:]).sum())
    if marginals_zero and block_sum <= 1.0 + oracles.FIT_PRE_TOL:
        witness = oracles.fit_separable_model(T[1:, 1:])
        return Verdict(SEPARABLE_MODEL, "ccnr-sum", total, 2.0, margin, witness=witness)
    return Verdict(INCONCLUSIVE, "ccnr-sum", total, 2.0, margin)


def _require_two_settings(D: datamatrix.DataMatrix, who: str) -> None:
    if D.n != 2:
        raise ValueError(f"{who}: qubit criteria are defined for 2 settings per side, got n={D.n}")


def _block_sv(D: datamatrix.DataMatrix) -> np.ndarray:
    sv = _sv_descending(datamatrix.correlation_block(D))
    if sv[0] > 1.0 + SV_PHYSICAL_TOL:
        raise ValueError(
            f"leading block singular value {sv[0]:.6f} exceeds 1; such data cannot "
            "come from a quantum state under a qubit assumption"
        )
    return sv


def certify_zero_marginal(
    D: datamatrix.DataMatrix, scenario: Scenario, eps: float = EPS_DEFAULT
) -> Verdict:
    """Two-setting qubit criteria for data with vanishing marginals.

    Orthogonal classes detect at l1 + l2 > 1 and a miss attaches a fitted
    separable model (the thresholds are attained).  The sqrt classes detect at
    sqrt(l1) + sqrt(l2) > sqrt(2); a miss attaches a model when l1 + l2 <= 1
    (the sharp orthogonal model is in-class), otherwise it is inconclusive
    with the tight-at-singular-value-level note: some data matrix with these
    singular values has a separable explanation, though not necessarily this one.
    """
    _require_two_settings(D, "certify_zero_marginal")
    if scenario.kind not in _QUBIT_KINDS:
        raise ValueError(f"certify_zero_marginal: not a qubit scenario: {scenario.kind}")
    if not datamatrix.marginals_vanish(D):
        raise ValueError(
            "certify_zero_marginal: marginals are nonzero; use certify_sharp_general "
            "(sharp assumptions) or det_criterion (dimension assumption) instead"
        )
    sv = _block_sv(D)
    l1, l2 = float(sv[0]), float(sv[1])
    if scenario.kind in ("sharp-orthogonal", "unsharp-orthogonal"):
        cid = "zero-marginal-sum"
        value, threshold = l1 + l2, 1.0
    else:
        cid = "zero-marginal-sqrt"
        value, threshold = math.sqrt(l1) + math.sqrt(l2), _SQRT2
    margin = value - threshold
    if margin > eps:
        return Verdict(ENTANGLED, cid, value, threshold, margin, scenario=scenario.kind)
    if l1 + l2 <= 1.0 + oracles.FIT_PRE_TOL:
        witness = oracles.fit_separable_model(datamatrix.correlation_block(D))
        return Verdict(SEPARABLE_MODEL, cid, value, threshold, margin, scenario=scenario.kind, witness=witness)
    # Either a hair above the threshold (inside the strictness band) or, for
    # the sqrt classes, in the genuine gap where some data matrix with these
    # singular values is separably explainable even though this one may not be.
    note = "within-strictness-tolerance" if margin > 0.0 else "tight-at-singular-value-level"
    return Verdict(
        INCONCLUSIVE,
        cid,
        value,
        threshold,
        margin,
        scenario=scenario.kind,
        notes=(note,),
    )


def certify_diagonal(D: datamatrix.DataMatrix, eps: float = EPS_DEFAULT) -> Verdict:
    """Fully diagonal two-setting data under the bare qubit assumption.

    Detection holds if and only if l1 + l2 > 1 (l = singular values of the
    block; sign flips are outcome relabellings).  Such data satisfy every
    CHSH inequality, so this rule strictly exceeds what Bell violation can
    certify; the achieved CHSH maximum is recorded in the notes.
    """
    _require_two_settings(D, "certify_diagonal")
    off = np.max(np.abs(D.mat - np.diag(np.diag(D.mat))))
    if off > DIAGONAL_TOL:
        raise ValueError(f"certify_diagonal: data matrix is not diagonal (max off-diagonal {off:.3e})")
    sv = _block_sv(D)
    value = float(sv.sum())
    chsh = chsh_max(D)
    notes = (f"chsh_max={chsh:.12g}",)
    margin = value - 1.0
    if margin > eps:
        return Verdict(ENTANGLED, "diagonal-sum", value, 1.0, margin,
                       scenario="qubit-uncharacterized", notes=notes)
    if value <= 1.0 + oracles.FIT_PRE_TOL:
        witness = oracles.fit_separable_model(datamatrix.correlation_block(D))
        return Verdict(SEPARABLE_MODEL, "diagonal-sum", value, 1.0, margin,
                       scenario="qubit-uncharacterized", witness=witness, notes=notes)
    return Verdict(INCONCLUSIVE, "diagonal-sum", value, 1.0, margin,
                   scenario="qubit-uncharacterized",
                   notes=notes + ("within-strictness-tolerance",))


def certify_sharp_general(D: datamatrix.DataMatrix, eps: float = EPS_DEFAULT) -> Verdict:
    """Sharp qubit pairs, unknown angle, marginals allowed.

    Minimizing the attainable sharp-orthogonal-frame trace norm over the
    unknown frame angles yields detection at sqrt(l1) + sqrt(l2) > sqrt(2) on
    the block singular values.  Sufficient only: a miss is inconclusive.
    Unlike the orthogonal-frame rules, block singular values above 1 are
    legitimate here: nearly parallel settings on a product state reach l1 = 2,
    exactly saturating the threshold, so no l1 <= 1 precondition applies.
    """
    _require_two_settings(D, "certify_sharp_general")
    sv = _sv_descending(datamatrix.correlation_block(D))
    value = math.sqrt(float(sv[0])) + math.sqrt(float(sv[1]))
    margin = value - _SQRT2
    status = ENTANGLED if margin > eps else INCONCLUSIVE
    return Verdict(status, "sharp-sqrt", value, _SQRT2, margin, scenario="sharp-nonorthogonal")


def det_threshold(n: int, d: int) -> float:
    """Detection threshold for |det D| with n settings per side on C^d."""
    if n == 2 and d == 3:
        return 64.0 / 81.0
    if n >= d:
        return ((d - 1.0) / n) ** n
    return (d / (n + 1.0)) ** (n + 1)


def _det_degree(n: int, d: int) -> int:
    """Homogeneity degree of the threshold: margins compare det^(1/degree)."""
    if n == 2 and d == 3:
        return 3
    return n if n >= d else n + 1


def det_criterion(
    D: datamatrix.DataMatrix,
    d: int,
    scan: bool = False,
    eps: float = EPS_DEFAULT,
    scan_cap: int = SCAN_CAP_DEFAULT,
) -> Verdict:
    """Dimension-only determinant test: entangled when |det D| clears the
    threshold for (n, d).

    Margins are computed on the det^(1/k) scale (k = the degree of the
    threshold) so the strictness eps stays meaningful at every n; the raw
    |det| is reported as the value.  With scan=True every sub-data-matrix on
    k settings per side is also tested (sizes whose submatrix count exceeds
    scan_cap are skipped and noted), and the best margin wins.  Sufficient
    only: non-detection is inconclusive, never a separability claim.
    """
    if d < 2:
        raise ValueError(f"det_criterion: dimension must be >= 2, got {d}")
    notes = []

    def scaled(mat: np.ndarray, k: int) -> tuple[float, float, float]:
        raw = abs(float(np.linalg.det(mat)))
        thr = det_threshold(k, d)
        degree = _det_degree(k, d)
        return raw, thr, raw ** (1.0 / degree) - thr ** (1.0 / degree)

    value, threshold, margin = scaled(D.mat, D.n)
    best = (margin, value, threshold, D.n)
    if scan:
        for k in range(D.n - 1, 0, -1):
            count = math.comb(D.n, k) ** 2
            if count > scan_cap:
                notes.append(f"scan-skipped-size-{k}")
                continue
            for sub in datamatrix.setting_submatrices(D, k):
                raw, thr, sub_margin = scaled(sub.mat, k)
                if sub_margin > best[0]:
                    best = (sub_margin, raw, thr, k)
    margin, value, threshold, used = best
    if used != D.n:
        notes.append(f"best-submatrix-settings={used}")
    status = ENTANGLED if margin > eps else INCONCLUSIVE
    return Verdict(
        status,
        f"determinant-d{d}",
        value,
        threshold,
        margin,
        scenario="dimension-bounded",
        notes=tuple(notes),
    )


def chsh_max(D: datamatrix.DataMatrix) -> float:
    """Largest |CHSH combination| of the four correlations (local bound 2)."""
    _require_two_settings(D, "chsh_max")
    b = datamatrix.correlation_block(D)
    combos = (
        b[0, 0] + b[0, 1] + b[1, 0] - b[1, 1],
        b[0, 0] + b[0, 1] - b[1, 0] + b[1, 1],
        b[0, 0] - b[0, 1] + b[1, 0] + b[1, 1],
        -b[0, 0] + b[0, 1] + b[1, 0] + b[1, 1],
    )
    return float(max(abs(c) for c in combos))


def _is_diagonal(D: datamatrix.DataMatrix) -> bool:
    return bool(np.max(np.abs(D.mat - np.diag(np.diag(D.mat)))) <= DIAGONAL_TOL)


def _unsharp_marginal_model(
    D: datamatrix.DataMatrix,
) -> tuple[oracles.SeparableWitness | None, float]:
    """Search for a separable model of full two-setting data under the
    unsharp-orthogonal class.

    Take the minimal valid sharpeners x2 = 1/(1 - |marginal|) per setting; the
    data come from a zero-marginal sharp-orthogonal-frame state exactly when
    the scaled block S_x (block - m_a m_b^T) S_y has singular-value sum <= 1.
    In that case the fitted model is unsharpened back into the observed frame
    and re-verified against the full data matrix, marginals included.
    Returns (witness or None, singular-value sum of the scaled block); the sum
    is inf when some marginal is at magnitude 1 and no sharpener exists.
    """
    m_a = np.array(D.mat[1:, 0])
    m_b = np.array(D.mat[0, 1:])
    if np.max(np.abs(m_a)) >= 1.0 - 1e-12 or np.max(np.abs(m_b)) >= 1.0 - 1e-12:
        return None, math.inf
    scale_a = 1.0 / (1.0 - np.abs(m_a))
    scale_b = 1.0 / (1.0 - np.abs(m_b))
    reduced = datamatrix.correlation_block(D) - np.outer(m_a, m_b)
    target = reduced * np.outer(scale_a, scale_b)
    sv = _sv_descending(target)
    target_sum = float(sv.sum())
    if sv[0] > 1.0 + oracles.FIT_PRE_TOL or target_sum > 1.0 + oracles.FIT_PRE_TOL:
        return None, target_sum
    core = oracles.fit_separable_model(target)
    # Unsharpen: A_i = (S_i - x1 1) / x2 with x1 = -x2 * marginal reproduces the
    # marginal on the zero-marginal core state and rescales the block back.
    from . import operators

    def unsharpen(fam, margins, scales):
        obs = []
        for sharp, m, s in zip(fam, margins, scales):
            x1 = -s * m
            obs.append(operators.DichotomicObservable((sharp.mat - x1 * np.eye(2)) / s))
        return operators.MeasurementFamily(tuple(obs))

    fam_a = unsharpen(core.measurements_a, m_a, scale_a)
    fam_b = unsharpen(core.measurements_b, m_b, scale_b)
    try:
        witness = oracles.SeparableWitness(
            state=core.state,
            measurements_a=fam_a,
            measurements_b=fam_b,
            data=np.array(D.mat),
            reproduction_error=0.0,
        )
    except ValueError:
        return None, target_sum
    return witness, target_sum


def certify(D: datamatrix.DataMatrix, scenario: Scenario, eps: float = EPS_DEFAULT) -> Verdict:
    """Route data to the strongest applicable rule for the scenario.

    dimension-bounded goes to the determinant test with submatrix scan.  For
    qubit scenarios (two settings required): fully diagonal data use the
    diagonal rule where it beats the sqrt rule; zero-marginal data use the
    per-class thresholds; data with marginals use the sqrt rule under sharp
    assumptions (the depolarized-block trace-norm rule under sharp-orthogonal)
    and, under unsharp assumptions, only a separable-model search: no rule in
    scope certifies entanglement there, and depolarizing the data first would
    be unsound, as the named example shows.
    """
    if scenario.kind == "dimension-bounded":
        return det_criterion(D, scenario.dimension, scan=True, eps=eps)
    _require_two_settings(D, "certify")
    if _is_diagonal(D):
        if scenario.kind in ("sharp-nonorthogonal", "qubit-uncharacterized"):
            return certify_diagonal(D, eps=eps)
        return certify_zero_marginal(D, scenario, eps=eps)
    if datamatrix.marginals_vanish(D):
        return certify_zero_marginal(D, scenario, eps=eps)
    if scenario.kind == "sharp-orthogonal":
        # Sharp orthogonal settings measure the Pauli frame directly, so the
        # depolarized matrix diag(1, block) is a valid correlation matrix of a
        # separable state whenever the data are; test it with the trace norm.
        block = datamatrix.correlation_block(D)
        sv = _block_sv(D)
        value = 1.0 + float(sv.sum())
        margin = value - 2.0
        status = ENTANGLED if margin > eps else INCONCLUSIVE
        return Verdict(status, "depolarized-ccnr-sum", value, 2.0, margin, scenario=scenario.kind)
    if scenario.kind == "sharp-nonorthogonal":
        return certify_sharp_general(D, eps=eps)
    # Unsharp classes with nonzero marginals: certification is out of reach,
    # but an explicit in-class separable model may still settle the instance.
    # value/threshold report the sharpened-block singular-value sum against 1;
    # a sum above 1 only means this particular sharpener fails, so the verdict
    # stays inconclusive rather than entangled.
    witness, target_sum = _unsharp_marginal_model(D)
    if witness is not None:
        return Verdict(
            SEPARABLE_MODEL,
            "unsharp-model-search",
            target_sum,
            1.0,
            target_sum - 1.0,
            scenario=scenario.kind,
            witness=witness,
        )
    return Verdict(
        INCONCLUSIVE,
        "unsharp-model-search",
        target_sum,
        1.0,
        target_sum - 1.0,
        scenario=scenario.kind,
        notes=("no-criterion-for-unsharp-nonzero-marginals",),
    )


def region_rows(resolution: int, eps: float = EPS_DEFAULT) -> np.ndarray:
    """Detection flags over the (l1, l2) in [0,1]^2 grid for zero-marginal data.

    Columns: l1, l2, case1 (sharp orthogonal), case2 (sharp), case3 (unsharp
    orthogonal), case4 (qubit), det_qubit, det_qutrit.  Flags are 0/1.
    """
    if resolution < 2:
        raise ValueError(f"region_rows: resolution {resolution} < 2")
    axis = np.linspace(0.0, 1.0, resolution)
    l1, l2 = np.meshgrid(axis, axis, indexing="ij")
    l1, l2 = l1.ravel(), l2.ravel()
    sum_rule = (l1 + l2 - 1.0) > eps
    sqrt_rule = (np.sqrt(l1) + np.sqrt(l2) - _SQRT2) > eps
    # Zero-marginal data matrix is diag(1, block), so |det D| = l1 l2.
    prod = l1 * l2
    det2 = (np.sqrt(prod) - np.sqrt(0.25)) > eps
    det3 = (np.cbrt(prod) - np.cbrt(64.0 / 81.0)) > eps
    flags = np.column_stack([sum_rule, sqrt_rule, sum_rule, sqrt_rule, det2, det3])
    return np.column_stack([l1, l2, flags.astype(float)])
