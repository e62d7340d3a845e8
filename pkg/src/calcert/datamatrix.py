"""Data matrices of two-party dichotomic correlation experiments.

For n settings per side the data matrix D is (n+1) x (n+1) with D[0,0] = 1,
first row/column the single-party marginals <A_i>, <B_j>, and the remaining
n x n block the correlations <A_i B_j>.  Builders from probability tables and
from (state, measurement families) pairs agree with each other; the JSON
input/output schema of the command-line tool lives here too.
"""

import ast
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import operators

ENTRY_TOL = 1e-9
MATRIX_CORNER_TOL = 1e-9
NORMALIZATION_TOL = 1e-9
NO_SIGNALLING_TOL = 1e-9
MARGINAL_TOL = 1e-9


def _frozen(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Validated (n+1) x (n+1) data matrix; entries in [-1, 1], corner 1."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 2:
            raise ValueError(f"DataMatrix: expected square (n+1)x(n+1), n >= 1, got {mat.shape}")
        if abs(mat[0, 0] - 1.0) > MATRIX_CORNER_TOL:
            raise ValueError(f"DataMatrix: entry (0,0) is {mat[0, 0]!r}, expected 1")
        worst = np.max(np.abs(mat))
        if worst > 1.0 + ENTRY_TOL:
            raise ValueError(f"DataMatrix: entry magnitude {worst!r} exceeds 1")
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def n(self) -> int:
        return self.mat.shape[0] - 1


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Pr(x, y | a, b) for outcomes +-1, stored as probs[a-1, b-1, ix, iy].

    Outcome index 0 means +1 and index 1 means -1.  Validated for
    non-negativity, per-setting normalization and no-signalling.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 4 or probs.shape[2:] != (2, 2):
            raise ValueError(f"ProbabilityTable: expected shape (n_a, n_b, 2, 2), got {probs.shape}")
        if np.min(probs) < -1e-12:
            bad = np.unravel_index(np.argmin(probs), probs.shape)
            raise ValueError(
                f"ProbabilityTable: negative probability {probs[bad]!r} at "
                f"setting (a={bad[0] + 1}, b={bad[1] + 1})"
            )
        totals = probs.sum(axis=(2, 3))
        off = np.abs(totals - 1.0)
        if np.max(off) > NORMALIZATION_TOL:
            a, b = np.unravel_index(np.argmax(off), off.shape)
            raise ValueError(
                f"ProbabilityTable: outcomes at setting (a={a + 1}, b={b + 1}) "
                f"sum to {totals[a, b]!r}, not 1"
            )
        # Alice's outcome distribution may not depend on b, and vice versa.
        marg_a = probs.sum(axis=3)  # (n_a, n_b, 2)
        dev_a = np.abs(marg_a - marg_a.mean(axis=1, keepdims=True))
        if np.max(dev_a) > NO_SIGNALLING_TOL:
            a, b, _ = np.unravel_index(np.argmax(dev_a), dev_a.shape)
            raise ValueError(
                f"ProbabilityTable: signalling to Alice at setting (a={a + 1}, b={b + 1}): "
                f"her marginal varies with b by {np.max(dev_a):.3e}"
            )
        marg_b = probs.sum(axis=2)
        dev_b = np.abs(marg_b - marg_b.mean(axis=0, keepdims=True))
        if np.max(dev_b) > NO_SIGNALLING_TOL:
            a, b, _ = np.unravel_index(np.argmax(dev_b), dev_b.shape)
            raise ValueError(
                f"ProbabilityTable: signalling to Bob at setting (a={a + 1}, b={b + 1}): "
                f"his marginal varies with a by {np.max(dev_b):.3e}"
            )
        object.__setattr__(self, "probs", _frozen(probs))

    @property
    def n_a(self) -> int:
        return self.probs.shape[0]

    @property
    def n_b(self) -> int:
        return self.probs.shape[1]


def from_probabilities(table: ProbabilityTable) -> DataMatrix:
    """Data matrix of a square probability table (marginals averaged over the
    other party's setting; no-signalling makes the average exact)."""
    if table.n_a != table.n_b:
        raise ValueError(
            f"from_probabilities: need equal setting counts, got n_a={table.n_a}, n_b={table.n_b}"
        )
    n = table.n_a
    p = table.probs
    sign = np.array([1.0, -1.0])
    mat = np.empty((n + 1, n + 1))
    mat[0, 0] = 1.0
    # <A_a> = sum_x x Pr(x | a), averaged over b; likewise for Bob.
    mat[1:, 0] = np.einsum("abxy,x->a", p, sign) / n
    mat[0, 1:] = np.einsum("abxy,y->b", p, sign) / n
    mat[1:, 1:] = np.einsum("abxy,x,y->ab", p, sign, sign)
    return DataMatrix(mat)


def probability_table_from_state(
    rho: operators.DensityOperator,
    family_a: operators.MeasurementFamily,
    family_b: operators.MeasurementFamily,
) -> ProbabilityTable:
    """Born-rule table Pr(x, y | a, b) = tr(rho E_x^a (x) E_y^b)."""
    effects_a = [operators.povm_from_observable(A) for A in family_a]
    effects_b = [operators.povm_from_observable(B) for B in family_b]
    probs = np.empty((len(family_a), len(family_b), 2, 2))
    for i, ea in enumerate(effects_a):
        for j, eb in enumerate(effects_b):
            for ix in range(2):
                for iy in range(2):
                    val = np.sum(rho.mat * np.kron(ea[ix].mat, eb[iy].mat).T)
                    probs[i, j, ix, iy] = val.real
    return ProbabilityTable(probs)


def from_state(
    rho: operators.DensityOperator,
    family_a: operators.MeasurementFamily,
    family_b: operators.MeasurementFamily,
) -> DataMatrix:
    """Exact data matrix of measuring rho with the two families."""
    if family_a.dim * family_b.dim != rho.dim:
        raise ValueError(
            f"from_state: family dims {family_a.dim} x {family_b.dim} "
            f"incompatible with state dim {rho.dim}"
        )
    n_a, n_b = len(family_a), len(family_b)
    if n_a != n_b:
        raise ValueError(f"from_state: need equal setting counts, got {n_a} and {n_b}")
    eye_a = operators.DichotomicObservable(operators.identity(family_a.dim))
    eye_b = operators.DichotomicObservable(operators.identity(family_b.dim))
    mat = np.empty((n_a + 1, n_b + 1))
    mat[0, 0] = 1.0
    for i, A in enumerate(family_a, start=1):
        mat[i, 0] = operators.expectation(rho, A, eye_b)
    for j, B in enumerate(family_b, start=1):
        mat[0, j] = operators.expectation(rho, eye_a, B)
    for i, A in enumerate(family_a, start=1):
        for j, B in enumerate(family_b, start=1):
            mat[i, j] = operators.expectation(rho, A, B)
    return DataMatrix(mat)


def correlation_block(D: DataMatrix) -> np.ndarray:
    """The n x n block of two-party correlations (marginals stripped)."""
    return np.array(D.mat[1:, 1:])


def singular_values(mat: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(np.asarray(mat, dtype=float), compute_uv=False)


def marginals_vanish(D: DataMatrix, tol: float = MARGINAL_TOL) -> bool:
    """True when every single-party marginal is zero within tol."""
    return bool(np.max(np.abs(D.mat[1:, 0])) <= tol and np.max(np.abs(D.mat[0, 1:])) <= tol)


def setting_submatrices(D: DataMatrix, k: int) -> list[DataMatrix]:
    """All (k+1) x (k+1) data matrices keeping row/col 0 and any k settings per side."""
    if not 1 <= k <= D.n:
        raise ValueError(f"setting_submatrices: k={k} outside 1..{D.n}")
    picks = [(0,) + rows for rows in itertools.combinations(range(1, D.n + 1), k)]
    out = []
    for rows in picks:
        for cols in picks:
            out.append(DataMatrix(D.mat[np.ix_(rows, cols)]))
    return out


def invert_marginals(D: DataMatrix) -> DataMatrix:
    """Negate both parties' marginals (outcome relabelling), keeping the block."""
    mat = np.array(D.mat)
    mat[1:, 0] *= -1.0
    mat[0, 1:] *= -1.0
    return DataMatrix(mat)


# ----------------------------- JSON input/output -----------------------------

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div)


def _eval_node(node: ast.AST, text: str) -> float:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval_node(node.operand, text)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
        left = _eval_node(node.left, text)
        right = _eval_node(node.right, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if right == 0.0:
            raise ValueError(f"entry expression {text!r}: division by zero")
        return left / right
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id == "sqrt"
        and len(node.args) == 1
        and not node.keywords
    ):
        arg = _eval_node(node.args[0], text)
        if arg < 0.0:
            raise ValueError(f"entry expression {text!r}: sqrt of negative value")
        return math.sqrt(arg)
    raise ValueError(
        f"entry expression {text!r}: only numbers, + - * /, parentheses and sqrt() are allowed"
    )


def evaluate_entry(value) -> float:
    """Evaluate a JSON matrix entry: a number, or a whitelisted expression string."""
    if isinstance(value, bool):
        raise ValueError(f"matrix entry {value!r} is not a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.replace("−", "-")  # unicode minus
        try:
            node = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"entry expression {value!r}: parse error ({exc.msg})") from None
        return _eval_node(node, value)
    raise ValueError(f"matrix entry {value!r} is neither a number nor an expression string")


def parse_input(obj: dict) -> DataMatrix:
    """Build a DataMatrix from a decoded JSON document.

    Two schemas are accepted:

    * {"type": "data_matrix", "settings": n, "matrix": [[...]]} where entries
      are numbers or expression strings such as "1-sqrt(3)";
    * {"type": "probabilities", "n_a": n, "n_b": n, "entries": [
          {"a": 1, "b": 1, "x": 1, "y": -1, "p": 0.25}, ...]} with every
      (a, b, x, y) combination present exactly once.
    """
    if not isinstance(obj, dict):
        raise ValueError("input document must be a JSON object")
    kind = obj.get("type")
    if kind == "data_matrix":
        try:
            n = int(obj["settings"])
            rows = obj["matrix"]
        except KeyError as exc:
            raise ValueError(f"data_matrix input: missing field {exc.args[0]!r}") from None
        if not isinstance(rows, list) or len(rows) != n + 1:
            raise ValueError(f"data_matrix input: expected {n + 1} rows for settings={n}")
        mat = np.empty((n + 1, n + 1))
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n + 1:
                raise ValueError(f"data_matrix input: row {i} must have {n + 1} entries")
            for j, entry in enumerate(row):
                mat[i, j] = evaluate_entry(entry)
        return DataMatrix(mat)
    if kind == "probabilities":
        try:
            n_a = int(obj["n_a"])
            n_b = int(obj["n_b"])
            entries = obj["entries"]
        except KeyError as exc:
            raise ValueError(f"probabilities input: missing field {exc.args[0]!r}") from None
        probs = np.full((n_a, n_b, 2, 2), np.nan)
        outcome_index = {1: 0, -1: 1}
        for entry in entries:
            try:
                a, b = int(entry["a"]), int(entry["b"])
                x, y = int(entry["x"]), int(entry["y"])
                p = float(entry["p"])
            except (KeyError, TypeError) as exc:
                raise ValueError(f"probabilities input: malformed entry {entry!r}") from None
            if not (1 <= a <= n_a and 1 <= b <= n_b):
                raise ValueError(f"probabilities input: setting (a={a}, b={b}) out of range")
            if x not in outcome_index or y not in outcome_index:
                raise ValueError(f"probabilities input: outcomes must be +-1, got (x={x}, y={y})")
            slot = (a - 1, b - 1, outcome_index[x], outcome_index[y])
            if not np.isnan(probs[slot]):
                raise ValueError(f"probabilities input: duplicate entry for (a={a}, b={b}, x={x}, y={y})")
            probs[slot] = p
        if np.isnan(probs).any():
            a, b, ix, iy = np.unravel_index(int(np.argmax(np.isnan(probs))), probs.shape)
            raise ValueError(
                "probabilities input: missing entry for "
                f"(a={a + 1}, b={b + 1}, x={1 - 2 * ix}, y={1 - 2 * iy})"
            )
        return from_probabilities(ProbabilityTable(probs))
    raise ValueError(f"input type must be 'data_matrix' or 'probabilities', got {kind!r}")


def load_data_matrix(text: str) -> DataMatrix:
    """Parse a JSON document (string) into a DataMatrix."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None
    return parse_input(obj)


def to_json(D: DataMatrix) -> str:
    """Serialize as a data_matrix document; floats round-trip exactly."""
    return json.dumps(
        {"type": "data_matrix", "settings": D.n, "matrix": [list(row) for row in D.mat]}
    )


def example_data_matrix() -> DataMatrix:
    """The named example data matrix (unsharp separable vs sharp entangled)."""
    return DataMatrix(np.array(operators.example_data_values()))
