import math

import numpy as np
import pytest

from calcert import criteria, datamatrix, operators
from calcert.selftest import bfp_data_matrix, pauli_family, werner_data_matrix

SQRT2 = math.sqrt(2.0)


def _diag_matrix(l1, l2, ma=0.0, mb=0.0):
    return datamatrix.DataMatrix(
        np.array([[1.0, mb, 0.0], [ma, l1, 0.0], [0.0, 0.0, l2]])
    )


def test_scenario_validation():
    with pytest.raises(ValueError):
        criteria.Scenario("bogus-kind")
    with pytest.raises(ValueError):
        criteria.dimension_bounded(1)
    with pytest.raises(ValueError):
        criteria.Scenario("sharp-orthogonal", dimension=3)
    assert criteria.dimension_bounded(4).dimension == 4
    assert criteria.SHARP_ORTHOGONAL.kind == "sharp-orthogonal"


def test_verdict_to_dict_keys():
    v = criteria.certify(datamatrix.example_data_matrix(), criteria.SHARP_NONORTHOGONAL)
    doc = v.to_dict()
    for key in ("status", "criterion", "margin", "threshold", "value", "scenario"):
        assert key in doc


def test_ccnr_corollary_werner_sides():
    hit = criteria.ccnr_corollary(werner_data_matrix(0.3, "xz").mat)
    assert hit.status == criteria.ENTANGLED
    assert abs(hit.value - 2.4) < 1e-12  # 1 + 0.7 + 0.7
    assert abs(hit.margin - 0.4) < 1e-12

    miss = criteria.ccnr_corollary(werner_data_matrix(0.6, "xz").mat)
    assert miss.status == criteria.SEPARABLE_MODEL
    assert miss.witness is not None
    assert miss.witness.reproduction_error <= 1e-9
    assert abs(miss.value - 1.8) < 1e-12

    with pytest.raises(ValueError):
        criteria.ccnr_corollary(np.eye(4))  # needs a 3x3 two-setting matrix


def test_ccnr_corollary_nonzero_marginals_miss_is_inconclusive():
    mat = np.array([[1.0, 0.3, 0.0], [0.3, 0.4, 0.0], [0.0, 0.0, 0.2]])
    v = criteria.ccnr_corollary(mat)
    assert v.status == criteria.INCONCLUSIVE
    assert v.witness is None


def test_zero_marginal_sum_rule():
    v = criteria.certify_zero_marginal(_diag_matrix(0.8, 0.3), criteria.SHARP_ORTHOGONAL)
    assert v.status == criteria.ENTANGLED
    assert v.criterion == "zero-marginal-sum"
    assert abs(v.margin - 0.1) < 1e-12

    miss = criteria.certify_zero_marginal(_diag_matrix(0.5, 0.4), criteria.SHARP_ORTHOGONAL)
    assert miss.status == criteria.SEPARABLE_MODEL
    assert miss.witness is not None


def test_zero_marginal_sqrt_rule():
    v = criteria.certify_zero_marginal(_diag_matrix(0.8, 0.3), criteria.SHARP_NONORTHOGONAL)
    assert v.criterion == "zero-marginal-sqrt"
    assert v.status == criteria.ENTANGLED
    assert abs(v.value - (math.sqrt(0.8) + math.sqrt(0.3))) < 1e-12
    assert abs(v.threshold - SQRT2) < 1e-15

    # sum <= 1 misses the sqrt rule but still admits a separable model
    miss = criteria.certify_zero_marginal(_diag_matrix(0.5, 0.4), criteria.QUBIT_UNCHARACTERIZED)
    assert miss.status == criteria.SEPARABLE_MODEL

    # gap region: sqrt rule misses, no model fits (sum > 1), tight note attached
    gap = criteria.certify_zero_marginal(_diag_matrix(0.9, 0.15), criteria.SHARP_NONORTHOGONAL)
    assert gap.status == criteria.INCONCLUSIVE
    assert "tight-at-singular-value-level" in gap.notes


def test_strictness_tolerance_band():
    near = _diag_matrix(0.5 + 5e-10, 0.5)
    v = criteria.certify_zero_marginal(near, criteria.SHARP_ORTHOGONAL)
    assert v.status == criteria.INCONCLUSIVE
    assert "within-strictness-tolerance" in v.notes
    clear = _diag_matrix(0.5 + 3e-9, 0.5)
    assert (
        criteria.certify_zero_marginal(clear, criteria.SHARP_ORTHOGONAL).status
        == criteria.ENTANGLED
    )


def test_certify_diagonal_beyond_bell_point():
    D = _diag_matrix(0.7, 0.4)
    v = criteria.certify_diagonal(D)
    assert v.status == criteria.ENTANGLED
    assert abs(v.margin - 0.1) < 1e-9
    assert any(note.startswith("chsh_max=") for note in v.notes)
    assert abs(criteria.chsh_max(D) - 1.1) < 1e-12


def test_certify_diagonal_rejects_offdiagonal_block():
    mat = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.2], [0.0, 0.0, 0.3]])
    with pytest.raises(ValueError):
        criteria.certify_diagonal(datamatrix.DataMatrix(mat))


def test_chsh_max_sign_patterns():
    block = np.array([[0.6, -0.2], [0.1, 0.5]])
    mat = np.eye(3)
    mat[1:, 1:] = block
    got = criteria.chsh_max(datamatrix.DataMatrix(mat))
    best = max(
        abs(block[0, 0] + block[0, 1] + block[1, 0] - block[1, 1]),
        abs(block[0, 0] + block[0, 1] - block[1, 0] + block[1, 1]),
        abs(block[0, 0] - block[0, 1] + block[1, 0] + block[1, 1]),
        abs(-block[0, 0] + block[0, 1] + block[1, 0] + block[1, 1]),
    )
    assert abs(got - best) < 1e-12


def test_certify_sharp_general_example_margin():
    D = datamatrix.example_data_matrix()
    v = criteria.certify_sharp_general(D)
    assert v.status == criteria.ENTANGLED
    assert v.criterion == "sharp-sqrt"
    l1 = (15.0 - 8.0 * math.sqrt(3.0)) / 2.0
    expect = math.sqrt(l1) + math.sqrt(0.5) - SQRT2
    assert abs(v.margin - expect) < 1e-6


def test_certify_sharp_general_allows_leading_value_above_one():
    # identical sharp settings on a product state: block sv are (2, 0) and the
    # sqrt rule saturates its threshold exactly; must not be detected or rejected
    mat = np.eye(3)
    mat[1:, 1:] = np.ones((2, 2))
    v = criteria.certify_sharp_general(datamatrix.DataMatrix(mat))
    assert v.status == criteria.INCONCLUSIVE
    assert abs(v.value - SQRT2) < 1e-12


def test_det_threshold_values():
    assert abs(criteria.det_threshold(2, 2) - 0.25) < 1e-15
    assert abs(criteria.det_threshold(3, 2) - 1.0 / 27.0) < 1e-15
    assert abs(criteria.det_threshold(2, 3) - 64.0 / 81.0) < 1e-15
    assert abs(criteria.det_threshold(15, 4) - (3.0 / 15.0) ** 15) < 1e-25
    assert abs(criteria.det_threshold(3, 3) - (2.0 / 3.0) ** 3) < 1e-15


def test_det_criterion_werner_point():
    D = werner_data_matrix(0.5, "xyz")
    v = criteria.det_criterion(D, 2)
    assert v.status == criteria.ENTANGLED
    assert abs(v.value - 0.125) < 1e-12
    assert abs(v.threshold - 1.0 / 27.0) < 1e-15
    # margin lives on the det^(1/n) root scale
    assert abs(v.margin - (0.5 - 1.0 / 3.0)) < 1e-12


def test_det_criterion_miss_is_inconclusive_never_separable():
    v = criteria.det_criterion(werner_data_matrix(0.9, "xyz"), 2)
    assert v.status == criteria.INCONCLUSIVE


def test_det_criterion_submatrix_scan():
    # full 3-setting det vanishes, the xz sub-block still certifies
    mat = np.eye(4)
    mat[1, 1] = -0.9
    mat[2, 2] = 0.0
    mat[3, 3] = -0.9
    v = criteria.det_criterion(datamatrix.DataMatrix(mat), 2, scan=True)
    assert v.status == criteria.ENTANGLED
    assert any(note.startswith("best-submatrix-settings=") for note in v.notes)


def test_det_criterion_bfp_threshold_sides():
    assert criteria.det_criterion(bfp_data_matrix(0.39), 4).status == criteria.ENTANGLED
    assert criteria.det_criterion(bfp_data_matrix(0.41), 4).status == criteria.INCONCLUSIVE


def test_certify_dispatch_example_matrix():
    D = datamatrix.example_data_matrix()

    sharp = criteria.certify(D, criteria.SHARP_NONORTHOGONAL)
    assert sharp.status == criteria.ENTANGLED
    assert sharp.criterion == "sharp-sqrt"

    ortho = criteria.certify(D, criteria.SHARP_ORTHOGONAL)
    assert ortho.status == criteria.ENTANGLED
    assert ortho.criterion == "depolarized-ccnr-sum"
    assert abs(ortho.value - 2.0717967697244912) < 1e-12

    unsharp = criteria.certify(D, criteria.UNSHARP_ORTHOGONAL)
    assert unsharp.status == criteria.SEPARABLE_MODEL
    assert unsharp.criterion == "unsharp-model-search"
    assert unsharp.witness is not None
    assert unsharp.witness.reproduction_error <= 1e-9

    qubit = criteria.certify(D, criteria.QUBIT_UNCHARACTERIZED)
    assert qubit.status == criteria.SEPARABLE_MODEL

    dim2 = criteria.certify(D, criteria.dimension_bounded(2))
    assert dim2.status == criteria.INCONCLUSIVE
    assert dim2.criterion == "determinant-d2"


def test_certify_routes_diagonal_data_by_scenario():
    D = _diag_matrix(0.7, 0.4)
    # qubit assumption uses the diagonal rule and wins beyond the Bell bound
    assert criteria.certify(D, criteria.QUBIT_UNCHARACTERIZED).criterion == "diagonal-sum"
    assert criteria.certify(D, criteria.SHARP_NONORTHOGONAL).criterion == "diagonal-sum"
    # orthogonal scenarios take the zero-marginal route (same threshold)
    assert criteria.certify(D, criteria.SHARP_ORTHOGONAL).criterion == "zero-marginal-sum"
    for scenario in (
        criteria.QUBIT_UNCHARACTERIZED,
        criteria.SHARP_ORTHOGONAL,
        criteria.UNSHARP_ORTHOGONAL,
    ):
        assert criteria.certify(D, scenario).status == criteria.ENTANGLED


def test_certify_unsharp_infeasible_target_is_inconclusive():
    # strong marginals force sharpened targets outside the fit region
    mat = np.array([[1.0, 0.9, 0.0], [0.9, 0.95, 0.0], [0.0, 0.0, 0.9]])
    v = criteria.certify(datamatrix.DataMatrix(mat), criteria.UNSHARP_ORTHOGONAL)
    assert v.status == criteria.INCONCLUSIVE
    assert "no-criterion-for-unsharp-nonzero-marginals" in v.notes


def test_certify_requires_two_settings_for_qubit_scenarios():
    D = werner_data_matrix(0.5, "xyz")
    with pytest.raises(ValueError):
        criteria.certify(D, criteria.SHARP_ORTHOGONAL)
    # dimension-bounded accepts any setting count
    assert criteria.certify(D, criteria.dimension_bounded(2)).status == criteria.ENTANGLED


def test_region_rows_shape_and_corner_flags():
    rows = criteria.region_rows(4)
    assert rows.shape == (16, 8)
    top = rows[-1]  # l1 = l2 = 1: every criterion detects
    assert np.allclose(top, [1, 1, 1, 1, 1, 1, 1, 1])
    origin = rows[0]
    assert np.allclose(origin, [0, 0, 0, 0, 0, 0, 0, 0])
    # (1, 1/3): sum rule and sqrt rule fire, qutrit det (64/81) does not
    row = rows[13]
    assert np.allclose(row[:2], [1.0, 1.0 / 3.0])
    assert row[2] == 1.0 and row[3] == 1.0
    assert row[7] == 0.0
