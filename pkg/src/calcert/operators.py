"""Quantum operator layer: states, dichotomic observables, named examples.

Conventions, fixed so every numeric value in the test-suite is reproducible:

* computational basis ordering |00>, |01>, |10>, |11>;
* Bell states  phi_pm = (|00> +/- |11>)/sqrt(2),  psi_pm = (|01> +/- |10>)/sqrt(2);
* the four-qubit family orders its tensor factors A (x) A' (x) B (x) B', and the
  bipartition of interest is (A, A') versus (B, B').

A dichotomic observable is any Hermitian A with spectrum inside [-1, 1]; its two
POVM effects are (1 +/- A)/2.  Containers are immutable after construction and
every operation is a pure function.
"""

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
SPECTRUM_TOL = 1e-10

sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
sigma_y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
sigma_z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
#: identity + Paulis, indexed 0..3; the usual basis for 2x2 Hermitian matrices.
PAULI_BASIS = (np.eye(2, dtype=complex), sigma_x, sigma_y, sigma_z)

_SQ2 = np.sqrt(2.0)
phi_plus = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / _SQ2
phi_minus = np.array([1.0, 0.0, 0.0, -1.0], dtype=complex) / _SQ2
psi_plus = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / _SQ2
psi_minus = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / _SQ2


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


def _frozen(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=complex)
    out.setflags(write=False)
    return out


def _check_hermitian(mat: np.ndarray, label: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{label}: expected a square matrix, got shape {mat.shape}")
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > HERMITICITY_TOL:
        raise ValueError(f"{label}: not Hermitian (max deviation {dev:.3e})")
    return mat


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix, validated at construction."""

    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _frozen(_check_hermitian(self.mat, "HermitianOperator")))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A density matrix: Hermitian, unit trace, positive semidefinite."""

    mat: np.ndarray

    def __post_init__(self):
        mat = _check_hermitian(self.mat, "DensityOperator")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"DensityOperator: trace {tr!r} differs from 1")
        low = np.linalg.eigvalsh(mat)[0]
        if low < -PSD_TOL:
            raise ValueError(f"DensityOperator: negative eigenvalue {low:.3e}")
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class DichotomicObservable:
    """A +-1-outcome measurement in expectation form: Hermitian, spectrum in [-1, 1]."""

    mat: np.ndarray

    def __post_init__(self):
        mat = _check_hermitian(self.mat, "DichotomicObservable")
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < -1.0 - SPECTRUM_TOL or evals[-1] > 1.0 + SPECTRUM_TOL:
            raise ValueError(
                f"DichotomicObservable: spectrum [{evals[0]:.6f}, {evals[-1]:.6f}] "
                "leaves [-1, 1]"
            )
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """An ordered tuple of same-dimension dichotomic observables for one party."""

    observables: tuple

    def __post_init__(self):
        obs = tuple(
            o if isinstance(o, DichotomicObservable) else DichotomicObservable(o)
            for o in self.observables
        )
        if not obs:
            raise ValueError("MeasurementFamily: at least one observable required")
        dims = {o.dim for o in obs}
        if len(dims) != 1:
            raise ValueError(f"MeasurementFamily: mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "observables", obs)

    @property
    def dim(self) -> int:
        return self.observables[0].dim

    def __len__(self) -> int:
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)

    def __getitem__(self, idx):
        return self.observables[idx]


def povm_from_observable(obs: DichotomicObservable) -> tuple[HermitianOperator, HermitianOperator]:
    """Effects ((1+A)/2, (1-A)/2) for outcomes +1 and -1; both PSD, summing to 1."""
    eye = identity(obs.dim)
    return (
        HermitianOperator((eye + obs.mat) / 2.0),
        HermitianOperator((eye - obs.mat) / 2.0),
    )


def expectation(rho: DensityOperator, obs_a: DichotomicObservable, obs_b: DichotomicObservable) -> float:
    """tr(rho A (x) B); real and in [-1, 1] for valid inputs."""
    if obs_a.dim * obs_b.dim != rho.dim:
        raise ValueError(
            f"expectation: dim {obs_a.dim} x {obs_b.dim} != state dim {rho.dim}"
        )
    op = np.kron(obs_a.mat, obs_b.mat)
    val = np.sum(rho.mat * op.T)  # = tr(rho @ op)
    return float(val.real)


def werner_state(p: float) -> DensityOperator:
    """Singlet mixed with white noise: (1-p) |psi-><psi-| + p 1/4, 0 <= p <= 1."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"werner_state: p={p} outside [0, 1]")
    return DensityOperator((1.0 - p) * projector(psi_minus) + p * np.eye(4) / 4.0)


def _reorder_factors(mat: np.ndarray, perm: tuple[int, ...]) -> np.ndarray:
    """Permute the tensor factors of a 4-qubit operator (row and column indices alike)."""
    t = mat.reshape((2,) * 8)
    axes = tuple(perm) + tuple(p + 4 for p in perm)
    return t.transpose(axes).reshape(16, 16)


# Bell-pair pattern of the two-pair bound entangled family: each entry is the
# (AB pair, A'B' pair) of one equally weighted term.
_BOUND_ENTANGLED_PAIRS = (
    (phi_plus, psi_minus),
    (psi_plus, psi_plus),
    (psi_minus, phi_minus),
    (phi_minus, psi_plus),
    (phi_minus, psi_minus),
    (phi_minus, phi_minus),
)


def bfp_state(p: float) -> DensityOperator:
    """Two-Bell-pair bound entangled 4x4 family mixed with white noise.

    The noiseless state is an equal mixture of six products of Bell projectors,
    one on qubits (A, B) and one on (A', B'), arranged so the state is PPT
    across the (A, A') | (B, B') cut while remaining entangled.  Factors are
    ordered A (x) A' (x) B (x) B'.  0 <= p <= 1 mixes in 1/16.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"bfp_state: p={p} outside [0, 1]")
    acc = np.zeros((16, 16), dtype=complex)
    for ab, a2b2 in _BOUND_ENTANGLED_PAIRS:
        term = np.kron(projector(ab), projector(a2b2))  # ordering (A, B, A', B')
        acc += _reorder_factors(term, (0, 2, 1, 3))  # -> (A, A', B, B')
    acc /= 6.0
    return DensityOperator((1.0 - p) * acc + p * np.eye(16) / 16.0)


def product_pauli_family() -> MeasurementFamily:
    """The 15 products s_k (x) s_l, (k, l) != (0, 0), row-major in (k, l).

    Each member squares to the identity (sharp, dichotomic) and the family is
    Hilbert-Schmidt orthogonal, tr(A_i A_j) = 4 delta_ij.
    """
    ops = []
    for k in range(4):
        for l in range(4):
            if k == l == 0:
                continue
            ops.append(DichotomicObservable(np.kron(PAULI_BASIS[k], PAULI_BASIS[l])))
    return MeasurementFamily(tuple(ops))


# -- named two-qubit example: one data matrix, two incompatible explanations ---

#: offsets of the unsharp first setting: s_x = X1 * 1 + X2 * A
EXAMPLE_X1 = 1.0 + np.sqrt(3.0)
EXAMPLE_X2 = 2.0 + np.sqrt(3.0)


def example_states() -> tuple[DensityOperator, DensityOperator]:
    """(separable, entangled) pair that explains the same example data matrix.

    The separable state is 1/4 (1 + (XX + ZZ)/2); measured with the unsharp
    first setting (s_x - X1)/X2 and sharp s_z it reproduces the example data.
    The entangled state carries the example data directly as its Pauli
    components over indices {0, x, z}, plus a y(x)y component 4 sqrt(3) - 7
    that makes it a valid (NPT) state; measured sharply with s_x, s_z it
    reproduces the same data.
    """
    eye4 = np.eye(4, dtype=complex)
    xx = np.kron(sigma_x, sigma_x)
    zz = np.kron(sigma_z, sigma_z)
    separable = DensityOperator((eye4 + 0.5 * (xx + zz)) / 4.0)

    d = example_data_values()
    paulis_xz = (PAULI_BASIS[0], sigma_x, sigma_z)
    acc = (4.0 * np.sqrt(3.0) - 7.0) * np.kron(sigma_y, sigma_y)
    for i in range(3):
        for j in range(3):
            acc = acc + d[i][j] * np.kron(paulis_xz[i], paulis_xz[j])
    entangled = DensityOperator(acc / 4.0)
    return separable, entangled


def example_data_values() -> list[list[float]]:
    """The example 3x3 data matrix as plain floats (marginals 1 - sqrt(3))."""
    a = 1.0 - np.sqrt(3.0)
    c = (15.0 - 8.0 * np.sqrt(3.0)) / 2.0
    return [[1.0, a, 0.0], [a, c, 0.0], [0.0, 0.0, 0.5]]


def example_unsharp_family() -> MeasurementFamily:
    """Unsharp-orthogonal settings ((s_x - X1)/X2, s_z) used by both parties."""
    unsharp = (sigma_x - EXAMPLE_X1 * np.eye(2)) / EXAMPLE_X2
    return MeasurementFamily((DichotomicObservable(unsharp), DichotomicObservable(sigma_z)))


def example_sharp_family() -> MeasurementFamily:
    """Sharp orthogonal settings (s_x, s_z) used by both parties."""
    return MeasurementFamily((DichotomicObservable(sigma_x), DichotomicObservable(sigma_z)))


def partial_transpose(mat: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Transpose the second tensor factor of an operator on C^da (x) C^db."""
    da, db = dims
    if mat.shape != (da * db, da * db):
        raise ValueError(f"partial_transpose: shape {mat.shape} != {(da * db, da * db)}")
    t = np.asarray(mat).reshape(da, db, da, db)
    return t.transpose(0, 3, 2, 1).reshape(da * db, da * db)


def ppt_check(rho: DensityOperator, dims: tuple[int, int]) -> tuple[bool, float]:
    """(is PPT, smallest partial-transpose eigenvalue) across dims = (da, db)."""
    low = float(np.linalg.eigvalsh(partial_transpose(rho.mat, dims))[0])
    return low >= -PSD_TOL, low
