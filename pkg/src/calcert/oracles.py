"""Independent numerical oracles and constructive separable models.

The two optimization oracles re-derive, by direct grid search with local
refinement, quantities that the criteria use in closed form; they deliberately
avoid those closed forms so agreement is evidence, not tautology:

* lemma1_oracle: minimize (l1+l2)^2/(a1^2 b1^2 + a2^2 b2^2) + 2 l1 l2/(a1 a2 b1 b2)
  over frame angles, with a = (sqrt(2)cos a, sqrt(2)sin a) etc.; the closed form
  is (sqrt(l1)+sqrt(l2))^4 / 4.
* lemma2_oracle: minimize m0+m1+m2 subject to m0 >= l0, m0 m1 >= l0 l1,
  m0 m1 m2 >= l0 l1 l2 and m0 >= m1 >= m2 >= 0; the value is l0+l1+l2.

fit_separable_model turns any 2x2 correlation block with singular-value sum
at most 1 into an explicit separable two-qubit state plus sharp orthogonal
measurements reproducing diag(1, block); every witness re-verifies itself at
construction (exact reproduction and a PPT check), so callers never trust an
unchecked model.
"""

from dataclasses import dataclass

import numpy as np

from . import datamatrix, operators

WITNESS_TOL = 1e-9
FIT_PRE_TOL = 1e-10
_DOMAIN_EDGE = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Grid-search control: points per axis and window-halving rounds."""

    resolution: int = 64
    refinement_rounds: int = 8

    def __post_init__(self):
        if self.resolution < 64:
            raise ValueError(f"GridSpec: resolution {self.resolution} < 64")
        if self.refinement_rounds < 2:
            raise ValueError(f"GridSpec: refinement_rounds {self.refinement_rounds} < 2")


def _refine_minimum(evaluate, lows, highs, grid: GridSpec, floors, ceils):
    """Coordinate grid search over a rectangle, shrinking around the argmin."""
    lows = np.array(lows, dtype=float)
    highs = np.array(highs, dtype=float)
    best = np.inf
    for _ in range(grid.refinement_rounds):
        axes = [np.linspace(lo, hi, grid.resolution) for lo, hi in zip(lows, highs)]
        mesh = np.meshgrid(*axes, indexing="ij")
        values = evaluate(*mesh)
        flat = int(np.argmin(values))
        best = min(best, float(values.flat[flat]))
        idx = np.unravel_index(flat, values.shape)
        centers = np.array([axes[k][idx[k]] for k in range(len(axes))])
        spans = (highs - lows) / (grid.resolution - 1) * 1.5
        lows = np.maximum(centers - spans, floors)
        highs = np.minimum(centers + spans, ceils)
    return best


def lemma1_oracle(l1: float, l2: float, grid: GridSpec | None = None) -> float:
    """Minimum of the frame-angle bound for block singular values (l1, l2) >= 0."""
    if l1 < 0.0 or l2 < 0.0:
        raise ValueError(f"lemma1_oracle: negative singular values ({l1}, {l2})")
    grid = grid or GridSpec()
    sum_sq = (l1 + l2) ** 2
    prod2 = 2.0 * l1 * l2

    def evaluate(alpha, beta):
        ca, sa = np.cos(alpha), np.sin(alpha)
        cb, sb = np.cos(beta), np.sin(beta)
        den1 = 4.0 * (ca * ca * cb * cb + sa * sa * sb * sb)
        den2 = np.sin(2.0 * alpha) * np.sin(2.0 * beta)
        return sum_sq / den1 + prod2 / den2

    lo = _DOMAIN_EDGE
    hi = np.pi / 2.0 - _DOMAIN_EDGE
    return _refine_minimum(evaluate, (lo, lo), (hi, hi), grid, (lo, lo), (hi, hi))


def lemma2_oracle(l0: float, l1: float, l2: float, grid: GridSpec | None = None) -> float:
    """Minimum of m0+m1+m2 under the ordered product constraints (= l0+l1+l2).

    The search runs over the cumulative products u = m0, v = m0 m1 with
    m2 pushed onto its constraint floor (the objective is strictly increasing
    in m2).  In these coordinates the product constraints are box floors
    aligned with the grid axes, so the refinement cannot stall on a curved
    active surface; only the ordering constraints remain as a mask.
    """
    if not l0 >= l1 >= l2 >= 0.0:
        raise ValueError(f"lemma2_oracle: need l0 >= l1 >= l2 >= 0, got ({l0}, {l1}, {l2})")
    grid = grid or GridSpec()
    # Strictify ties so the feasible-boundary argmin is unambiguous on the grid.
    l0, l1 = l0 + 2e-12, l1 + 1e-12
    target01 = l0 * l1
    target012 = l0 * l1 * l2
    # Any point beating the corner satisfies u + v/u + m2 <= l0+l1+l2 <= 3 l0,
    # hence u <= 3 l0 and v <= u * 3 l0; pad the box a little beyond that.
    u_hi = 3.0 * l0 + 1.0
    v_hi = 3.0 * l0 * u_hi + 1.0
    slack = 1e-11 * max(1.0, u_hi) ** 2

    def evaluate(u, v):
        with np.errstate(divide="ignore", invalid="ignore"):
            m1 = v / np.maximum(u, 1e-300)
            m2 = np.where(target012 > 0.0, target012 / np.maximum(v, 1e-300), 0.0)
        ordered = (m1 <= u + slack) & (m2 <= m1 + slack)
        return np.where(ordered, u + m1 + m2, np.inf)

    return _refine_minimum(
        evaluate,
        (l0, target01),
        (u_hi, v_hi),
        grid,
        (l0, target01),
        (np.inf, np.inf),
    )


def orthogonal_to_unitary(O: np.ndarray) -> np.ndarray:
    """SU(2) element U with U s_k U^dag = sum_l O[l, k] s_l, for O in SO(3).

    The lift is via the quaternion of O (largest-component branch for
    stability); the sign is fixed by making the first nonzero quaternion
    component positive.  The conjugation identity is verified on the three
    Pauli directions before returning.
    """
    O = np.asarray(O, dtype=float)
    if O.shape != (3, 3) or np.max(np.abs(O.T @ O - np.eye(3))) > 1e-9:
        raise ValueError("orthogonal_to_unitary: input is not orthogonal")
    det = np.linalg.det(O)
    if abs(det - 1.0) > 1e-9:
        raise ValueError(
            f"orthogonal_to_unitary: det {det:.6f} != +1; absorb the reflection "
            "into the correlation weights first"
        )
    t = np.trace(O)
    candidates = [1.0 + t, 1.0 + 2.0 * O[0, 0] - t, 1.0 + 2.0 * O[1, 1] - t, 1.0 + 2.0 * O[2, 2] - t]
    branch = int(np.argmax(candidates))
    r = np.sqrt(max(candidates[branch], 0.0))
    if branch == 0:
        q = np.array([r, (O[2, 1] - O[1, 2]) / r, (O[0, 2] - O[2, 0]) / r, (O[1, 0] - O[0, 1]) / r])
    elif branch == 1:
        q = np.array([(O[2, 1] - O[1, 2]) / r, r, (O[0, 1] + O[1, 0]) / r, (O[0, 2] + O[2, 0]) / r])
    elif branch == 2:
        q = np.array([(O[0, 2] - O[2, 0]) / r, (O[0, 1] + O[1, 0]) / r, r, (O[1, 2] + O[2, 1]) / r])
    else:
        q = np.array([(O[1, 0] - O[0, 1]) / r, (O[0, 2] + O[2, 0]) / r, (O[1, 2] + O[2, 1]) / r, r])
    q = q / np.linalg.norm(q)
    for comp in q:
        if abs(comp) > 1e-12:
            if comp < 0.0:
                q = -q
            break
    w, x, y, z = q
    U = w * np.eye(2, dtype=complex) - 1j * (
        x * operators.sigma_x + y * operators.sigma_y + z * operators.sigma_z
    )
    paulis = (operators.sigma_x, operators.sigma_y, operators.sigma_z)
    for k in range(3):
        image = U @ paulis[k] @ U.conj().T
        target = sum(O[l, k] * paulis[l] for l in range(3))
        if np.max(np.abs(image - target)) > 1e-8:
            raise ValueError("orthogonal_to_unitary: lift failed verification")
    return U


@dataclass(frozen=True, eq=False)
class SeparableWitness:
    """A separable two-qubit state plus measurement families reproducing `data`.

    Construction re-verifies the claim: the measured data matrix must match
    `data` within WITNESS_TOL and the state must be PPT (two qubits, so PPT
    means separable).  An invalid witness cannot be instantiated.
    """

    state: operators.DensityOperator
    measurements_a: operators.MeasurementFamily
    measurements_b: operators.MeasurementFamily
    data: np.ndarray
    reproduction_error: float

    def __post_init__(self):
        data = np.array(np.asarray(self.data, dtype=float))
        produced = datamatrix.from_state(self.state, self.measurements_a, self.measurements_b)
        err = float(np.max(np.abs(produced.mat - data)))
        if err > WITNESS_TOL:
            raise ValueError(f"SeparableWitness: reproduction error {err:.3e} exceeds {WITNESS_TOL}")
        is_ppt, low = operators.ppt_check(self.state, (2, 2))
        if not is_ppt:
            raise ValueError(f"SeparableWitness: state is not PPT (min eigenvalue {low:.3e})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "reproduction_error", err)


def fit_separable_model(block: np.ndarray) -> SeparableWitness:
    """Separable model for a 2x2 correlation block with singular-value sum <= 1.

    Writes block = U diag(s1, s2) V^T, prepares the Bell-diagonal state with
    correlation diag(s1, s2, 0) (weights (1 +- s1 +- s2)/4, all in [0, 1/2]
    when s1 + s2 <= 1), and rotates it by the SU(2) lifts of the SVD frames.
    Reflections are absorbed into the unused third channel, which carries
    correlation 0.  The returned model reproduces diag(1, block) exactly under
    sharp s_x, s_y measurements on both sides.
    """
    block = np.asarray(block, dtype=float)
    if block.shape != (2, 2):
        raise ValueError(f"fit_separable_model: expected a 2x2 block, got {block.shape}")
    u2, sv, v2t = np.linalg.svd(block)
    if sv[0] > 1.0 + FIT_PRE_TOL or sv.sum() > 1.0 + FIT_PRE_TOL:
        raise ValueError(
            f"fit_separable_model: singular values ({sv[0]:.6f}, {sv[1]:.6f}) admit "
            f"no separable model (sum {sv.sum():.6f} > 1)"
        )
    s1, s2 = float(sv[0]), float(sv[1])
    # Bell-diagonal weights giving correlation diag(s1, s2, 0) in (x, y, z).
    weights = {
        "phi_plus": (1.0 + s1 - s2) / 4.0,
        "phi_minus": (1.0 - s1 + s2) / 4.0,
        "psi_plus": (1.0 + s1 + s2) / 4.0,
        "psi_minus": (1.0 - s1 - s2) / 4.0,
    }
    kets = {
        "phi_plus": operators.phi_plus,
        "phi_minus": operators.phi_minus,
        "psi_plus": operators.psi_plus,
        "psi_minus": operators.psi_minus,
    }
    core = np.zeros((4, 4), dtype=complex)
    for name, w in weights.items():
        core += w * operators.projector(kets[name])

    o_a = np.eye(3)
    o_a[:2, :2] = u2
    o_a[2, 2] = np.linalg.det(u2)
    o_b = np.eye(3)
    o_b[:2, :2] = v2t.T
    o_b[2, 2] = np.linalg.det(v2t)
    u_a = orthogonal_to_unitary(o_a)
    u_b = orthogonal_to_unitary(o_b)
    local = np.kron(u_a, u_b)
    state = operators.DensityOperator(local @ core @ local.conj().T)

    fam = operators.MeasurementFamily(
        (operators.DichotomicObservable(operators.sigma_x), operators.DichotomicObservable(operators.sigma_y))
    )
    target = np.eye(3)
    target[1:, 1:] = block
    return SeparableWitness(
        state=state, measurements_a=fam, measurements_b=fam, data=target, reproduction_error=0.0
    )


def random_separable_state(seed: int, d: int = 2, k: int = 4) -> operators.DensityOperator:
    """Deterministic random mixture of k pure product states on C^d (x) C^d."""
    if d < 2 or k < 1:
        raise ValueError(f"random_separable_state: invalid d={d} or k={k}")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(k))
    acc = np.zeros((d * d, d * d), dtype=complex)
    for w in weights:
        acc += w * operators.projector(np.kron(_random_ket(rng, d), _random_ket(rng, d)))
    return operators.DensityOperator(acc)


def _random_ket(rng: np.random.Generator, d: int) -> np.ndarray:
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return vec / np.linalg.norm(vec)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-ish unitary via QR of a complex Gaussian matrix with phase fixing."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_observable(rng: np.random.Generator, d: int) -> operators.DichotomicObservable:
    """Random valid dichotomic observable: Haar frame, spectrum uniform in [-1, 1]."""
    u = random_unitary(rng, d)
    evals = rng.uniform(-1.0, 1.0, size=d)
    return operators.DichotomicObservable(u @ np.diag(evals) @ u.conj().T)


def _direction_observable(a0: float, r: float, direction: np.ndarray) -> operators.DichotomicObservable:
    paulis = (operators.sigma_x, operators.sigma_y, operators.sigma_z)
    mat = a0 * np.eye(2, dtype=complex)
    for comp, pauli in zip(direction, paulis):
        mat = mat + r * comp * pauli
    return operators.DichotomicObservable(mat)


def random_scenario_family(rng: np.random.Generator, kind: str) -> operators.MeasurementFamily:
    """Random two-setting qubit family inside the given assumption class."""
    frame = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    u, v = frame[:, 0], frame[:, 1]
    w = _random_ket(rng, 3).real
    w /= np.linalg.norm(w)
    if kind == "sharp-orthogonal":
        pairs = ((0.0, 1.0, u), (0.0, 1.0, v))
    elif kind == "sharp-nonorthogonal":
        pairs = ((0.0, 1.0, u), (0.0, 1.0, w))
    elif kind == "unsharp-orthogonal":
        a0, b0 = rng.uniform(-0.9, 0.9, size=2)
        pairs = (
            (a0, (1.0 - abs(a0)) * rng.uniform(0.05, 1.0), u),
            (b0, (1.0 - abs(b0)) * rng.uniform(0.05, 1.0), v),
        )
    elif kind == "qubit-uncharacterized":
        a0, b0 = rng.uniform(-0.9, 0.9, size=2)
        pairs = (
            (a0, (1.0 - abs(a0)) * rng.uniform(0.05, 1.0), u),
            (b0, (1.0 - abs(b0)) * rng.uniform(0.05, 1.0), w),
        )
    else:
        raise ValueError(f"random_scenario_family: unknown kind {kind!r}")
    return operators.MeasurementFamily(tuple(_direction_observable(*p) for p in pairs))


def threshold_bisection(build, criterion, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Bisect the detection boundary of `criterion(build(p))` over [lo, hi].

    The criterion must flip exactly once across the interval; this is checked
    at the endpoints (one end detected, the other not).
    """
    if not hi > lo:
        raise ValueError(f"threshold_bisection: need lo < hi, got [{lo}, {hi}]")

    def detected(p: float) -> bool:
        verdict = criterion(build(p))
        return getattr(verdict, "status", verdict) == "entangled"

    det_lo, det_hi = detected(lo), detected(hi)
    if det_lo == det_hi:
        raise ValueError(
            f"threshold_bisection: criterion is not monotone over [{lo}, {hi}] "
            f"(detected at both ends: {det_lo})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if detected(mid) == det_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
