"""Frame changes between observed data matrices and sharp orthogonal frames.

A sharp qubit pair A = cos(t) s_i + sin(t) s_j, A' = cos(t) s_i - sin(t) s_j
(s_i, s_j orthogonal Paulis) relates the observed data matrix D3 to the
correlation matrix T3 in the (1, s_i, s_j) frame by T3 = R(ta) D3 R(tb)^T,
where

    R(t) = [[1,        0,         0       ],
            [0, 1/(2cos t),  1/(2cos t)   ],
            [0, 1/(2sin t), -1/(2sin t)   ]]

and the nontrivial 2x2 block has inverse [[cos t, sin t], [cos t, -sin t]].
Unsharp orthogonal pairs s_i = x1 1 + x2 A, s_j = x3 1 + x4 A' give instead
T3 = S(x) D3 S(y)^T with the lower-triangular sharpener

    S(x) = [[1,  0,  0 ],
            [x1, x2, 0 ],
            [x3, 0,  x4]],    x2 >= 1 + |x1|,  x4 >= 1 + |x3|.

The Gram-Schmidt routine orthonormalizes {1, A_1, ..., A_n} in the
Hilbert-Schmidt inner product and returns the lower-triangular coefficient
matrix G, whose determinant lower bounds drive the dimension-only criterion.
"""

from dataclasses import dataclass

import numpy as np

from . import operators

PIVOT_TOL = 1e-10
HALF_PI = np.pi / 2.0


def rotation_block(theta: float) -> np.ndarray:
    """2x2 block mapping observed sharp non-orthogonal settings to Paulis."""
    if not 0.0 < theta < HALF_PI:
        raise ValueError(f"rotation_block: theta={theta} outside the open interval (0, pi/2)")
    c = 1.0 / (2.0 * np.cos(theta))
    s = 1.0 / (2.0 * np.sin(theta))
    return np.array([[c, c], [s, -s]])


def rotation_block_inverse(theta: float) -> np.ndarray:
    """Inverse block [[cos, sin], [cos, -sin]]; its singular values are
    sqrt(2) cos(theta) and sqrt(2) sin(theta)."""
    if not 0.0 < theta < HALF_PI:
        raise ValueError(f"rotation_block_inverse: theta={theta} outside (0, pi/2)")
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [c, -s]])


def rotation_matrix(theta: float) -> np.ndarray:
    """Full 3x3 frame change (identity row/column plus rotation_block)."""
    out = np.eye(3)
    out[1:, 1:] = rotation_block(theta)
    return out


def sharpener_matrix(params) -> np.ndarray:
    """3x3 sharpener S(x) for params (x1, x2, x3, x4).

    Validity (the unsharp observables have spectrum inside [-1, 1]) requires
    x2 >= 1 + |x1| and x4 >= 1 + |x3|, in particular x2, x4 >= 1.
    """
    x1, x2, x3, x4 = (float(v) for v in params)
    if x2 < 1.0 + abs(x1):
        raise ValueError(f"sharpener_matrix: x2={x2} < 1 + |x1|={1.0 + abs(x1)}")
    if x4 < 1.0 + abs(x3):
        raise ValueError(f"sharpener_matrix: x4={x4} < 1 + |x3|={1.0 + abs(x3)}")
    return np.array([[1.0, 0.0, 0.0], [x1, x2, 0.0], [x3, 0.0, x4]])


@dataclass(frozen=True, eq=False)
class GramSchmidtResult:
    """Orthonormal operators K_0..K_n and the lower-triangular G with
    K_i = sum_j G[i, j] * input_j (input_0 = identity)."""

    operators: tuple
    transform: np.ndarray


def _as_matrices(family) -> list[np.ndarray]:
    mats = []
    for item in family:
        mats.append(np.asarray(item.mat if hasattr(item, "mat") else item, dtype=complex))
    return mats


def gram_schmidt(family) -> GramSchmidtResult:
    """Hilbert-Schmidt Gram-Schmidt over {identity} + family, identity first.

    Raises if some operator is linearly dependent on its predecessors (pivot
    below PIVOT_TOL relative to the operator's own Hilbert-Schmidt norm).
    """
    mats = _as_matrices(family)
    if not mats:
        raise ValueError("gram_schmidt: empty family")
    d = mats[0].shape[0]
    inputs = [operators.identity(d)] + mats
    vecs = [m.reshape(-1) for m in inputs]
    coeffs = np.zeros((len(inputs), len(inputs)))
    basis = []
    for i, vec in enumerate(vecs):
        if vec.shape != vecs[0].shape:
            raise ValueError("gram_schmidt: mixed operator dimensions")
        coeff = np.zeros(len(inputs))
        coeff[i] = 1.0
        residual = vec.copy()
        for j, prev in enumerate(basis):
            overlap = np.vdot(prev, residual).real
            residual = residual - overlap * prev
            coeff -= overlap * coeffs[j]
        norm = np.sqrt(np.vdot(residual, residual).real)
        scale = np.sqrt(np.vdot(vec, vec).real)
        if norm <= PIVOT_TOL * scale:
            raise ValueError(
                f"gram_schmidt: operator {i} (identity counts as 0) is linearly "
                f"dependent on its predecessors (pivot {norm:.3e})"
            )
        basis.append(residual / norm)
        coeffs[i] = coeff / norm
    ops = tuple(b.reshape(d, d) for b in basis)
    return GramSchmidtResult(operators=ops, transform=coeffs)


def normalization_part(family) -> np.ndarray:
    """Diagonal N with N[0,0] = 1/sqrt(d), N[i,i] = 1/sqrt(tr A_i^2): the
    pure-rescaling factor of G in G = O N with |det O| >= 1."""
    mats = _as_matrices(family)
    d = mats[0].shape[0]
    diag = [1.0 / np.sqrt(d)]
    for m in mats:
        diag.append(1.0 / np.sqrt(np.trace(m @ m).real))
    return np.diag(diag)


def orthonormalized_correlation(D, family_a, family_b) -> np.ndarray:
    """C = G_a D G_b^T: the data matrix rewritten in the orthonormalized
    operator frames of the two parties (exposed for diagnostics)."""
    mat = np.asarray(D.mat if hasattr(D, "mat") else D, dtype=float)
    g_a = gram_schmidt(family_a).transform
    g_b = gram_schmidt(family_b).transform
    if g_a.shape[0] != mat.shape[0] or g_b.shape[0] != mat.shape[1]:
        raise ValueError(
            f"orthonormalized_correlation: families of sizes {g_a.shape[0] - 1}, "
            f"{g_b.shape[0] - 1} do not match data matrix shape {mat.shape}"
        )
    return g_a @ mat @ g_b.T
