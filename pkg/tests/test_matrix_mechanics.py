import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_commutator, trk_recursion_sho
from sedlab import make_scale, natural_scale
from sedlab.errors import DimensionTooSmall, IndexOutOfRange, InconsistentInputs, MismatchedModeSets
from sedlab.matrix_mechanics import (
    LinearForm,
    ResponseMatrices,
    bilinear_form,
    commutator,
    sho_response_matrices,
    state_forms,
    trk_sum,
)


def test_n2_element_from_sum_rule(scale):
    m = sho_response_matrices(scale, 1.0, 2)
    assert m.x_mat[0, 1].real == trk_recursion_sho(2)[0]
    assert m.x_mat[0, 1].real == pytest.approx(np.sqrt(0.5), rel=1e-15)


@pytest.mark.parametrize("N", [2, 3, 7, 64])
def test_elements_match_recursion_oracle(N):
    s = make_scale(0.01, 2.0, 1.0, 1.5, hbar=0.7)
    m = sho_response_matrices(s, 1.5, N)
    want = trk_recursion_sho(N, 0.7, 2.0, 1.5)
    np.testing.assert_allclose(np.diag(m.x_mat, 1).real, want, rtol=1e-14)
    # selection rule: nothing beyond nearest neighbours
    mask = np.abs(np.subtract.outer(np.arange(N), np.arange(N))) != 1
    assert np.all(m.x_mat[mask] == 0)


def test_structure_exact(scale):
    m = sho_response_matrices(scale, 1.0, 10)
    assert np.array_equal(m.x_mat, m.x_mat.conj().T)
    assert np.array_equal(m.omega_grid, -m.omega_grid.T)
    assert np.array_equal(m.p_mat, m.p_mat.conj().T)
    assert np.array_equal(m.p_mat, -1j * m.omega_grid * m.x_mat)
    m.validate()


def test_dimension_too_small(scale):
    with pytest.raises(DimensionTooSmall):
        sho_response_matrices(scale, 1.0, 1)


def test_trk_values(scale):
    N = 6
    m = sho_response_matrices(scale, 1.0, N)
    for n in range(N - 1):
        r = trk_sum(m, n)
        assert r.value == pytest.approx(0.5, rel=1e-14) and not r.edge
    r = trk_sum(m, N - 1)
    assert r.edge
    # only the downward neighbour survives: -omega0 |x_{N-1,N-2}|^2
    assert r.value == pytest.approx(-(N - 1) * 0.5, rel=1e-14)
    with pytest.raises(IndexOutOfRange):
        trk_sum(m, N)
    with pytest.raises(IndexOutOfRange):
        trk_sum(m, -1)


def test_trk_linear_in_hbar():
    a = sho_response_matrices(make_scale(0.01, 1.0, 1.0, 1.0, hbar=1.0), 1.0, 5)
    b = sho_response_matrices(make_scale(0.01, 1.0, 1.0, 1.0, hbar=2.0), 1.0, 5)
    assert trk_sum(b, 2).value == pytest.approx(2 * trk_sum(a, 2).value, rel=1e-14)


def test_commutator_n4(scale):
    m = sho_response_matrices(scale, 1.0, 4)
    rep = commutator(m)
    np.testing.assert_allclose(np.diag(rep.matrix), [1j, 1j, 1j, -3j], atol=1e-15)
    np.testing.assert_allclose(rep.matrix, brute_commutator(m.x_mat, m.p_mat), atol=1e-15)
    assert rep.edge_flag
    assert rep.max_offdiagonal < 1e-14


def test_commutator_properties(scale):
    m = sho_response_matrices(scale, 1.0, 9)
    c = commutator(m).matrix
    np.testing.assert_allclose(c.conj().T, -c, atol=1e-15)
    xx = m.x_mat @ m.x_mat - m.x_mat @ m.x_mat
    assert np.all(xx == 0)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 64), hbar=st.floats(0.1, 10), mass=st.floats(0.1, 10), w=st.floats(0.1, 10))
def test_commutator_exact_any_N(N, hbar, mass, w):
    s = make_scale(1e-3, mass, 1.0, w, hbar=hbar)
    m = sho_response_matrices(s, w, N)
    rep = commutator(m)
    assert rep.max_interior_error <= 1e-12 * hbar * max(1, N)
    assert rep.max_offdiagonal <= 1e-12 * hbar * max(1, N)
    for n in range(N - 1):
        assert abs(trk_sum(m, n).value - hbar / (2 * mass)) <= 1e-12 * hbar / mass * max(1, N)


def test_bilinear_canonical_pair():
    a = LinearForm({"b": 1.0}, {})
    a_star = LinearForm({}, {"b": 1.0})
    assert bilinear_form(a, a_star) == 1
    assert bilinear_form(a_star, a) == -1


def test_bilinear_self_is_zero(scale):
    m = sho_response_matrices(scale, 1.0, 6)
    xf, _ = state_forms(m, 2, 0.4)
    assert bilinear_form(xf, xf) == 0


def test_bilinear_mismatched():
    f = LinearForm({"a": 1.0}, {"a": 0.5})
    g = LinearForm({"b": 1.0}, {"b": 0.5})
    with pytest.raises(MismatchedModeSets):
        bilinear_form(f, g)
    assert bilinear_form(f, g, strict=False) == 0


@pytest.mark.parametrize("t", [0.0, 1.3, 50.0])
def test_bilinear_matches_commutator(scale, t):
    N = 8
    m = sho_response_matrices(scale, 1.0, N)
    c = commutator(m).matrix
    for n in range(N - 1):
        xf, pf = state_forms(m, n, t)
        assert bilinear_form(xf, pf) == pytest.approx(1j, abs=1e-14)
        assert bilinear_form(xf, pf) == pytest.approx(c[n, n], abs=1e-14)


def test_user_matrices_validated(scale):
    x = np.array([[0, 1.0], [1.0, 0]])
    w = np.array([[0, 2.0], [-2.0, 0]])
    ResponseMatrices.from_x(x, w, scale)
    with pytest.raises(InconsistentInputs):
        ResponseMatrices.from_x(np.array([[0, 1.0], [2.0, 0]]), w, scale)
    with pytest.raises(InconsistentInputs):
        ResponseMatrices.from_x(x, np.array([[0, 2.0], [2.0, 0]]), scale)
    with pytest.raises(InconsistentInputs):
        ResponseMatrices(x + 0j, x + 0j, w, scale).validate()


def test_json_round_trip(scale):
    m = sho_response_matrices(natural_scale(2e-3), 1.0, 5)
    back = ResponseMatrices.from_json(m.to_json())
    assert np.array_equal(back.x_mat, m.x_mat)
    assert np.array_equal(back.p_mat, m.p_mat)
    assert np.array_equal(back.omega_grid, m.omega_grid)
    assert back.scale == m.scale
    d = m.to_dict()
    assert d["x"][0][1] == [m.x_mat[0, 1].real, 0.0]


def test_commutator_report_json(scale):
    rep = commutator(sho_response_matrices(scale, 1.0, 3)).to_dict()
    assert rep["edge_flag"] is True and len(rep["diagonal_errors"]) == 3
