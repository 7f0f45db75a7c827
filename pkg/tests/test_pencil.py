from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gqms import sdp
from gqms.graphs import complete, cycle, path
from gqms.magic import (BlockMatrix, cyclic_group, dihedral_group, from_permutation, graph_commutation_residual,
                        group_average, random_qms, uniform_square, verify_magic)
from gqms.pencil import (MonicPencil, ParametrizationError, arveson_dilation_probe, evaluate_pencil,
                         export_json, export_sdpa, gqms_affine, gqms_affine_composed, load_json,
                         membership_test, monic_gqms_pencil, monic_identity_exact, monic_qms_pencil,
                         nullspace_exact, qms_affine, rref)

DATA = Path(__file__).parent / "data"
C4 = cycle(4)


def test_rref_and_exact_nullspace():
    R, piv = rref([[Fraction(2), Fraction(4)], [Fraction(1), Fraction(2)]])
    assert piv == [0] and R == [[1, 2]]
    N = nullspace_exact([[Fraction(1), Fraction(1), Fraction(1)]], 3)
    assert len(N) == 2
    for v in N:
        assert sum(v) == 0


def test_n2_has_one_free_block():
    par = qms_affine(2, 1)
    assert par.independent == [(0, 0)]
    X = par.evaluate(np.array([[[0.3]]]))
    assert np.allclose(X.blocks[..., 0, 0], [[0.3, 0.7], [0.7, 0.3]])


def test_n4_last_entry_coefficients():
    par = qms_affine(4, 1)
    last = 4 * 4 - 1
    assert par.constant[last] == -2
    assert par.coeff[last] == [1] * 9


@pytest.mark.parametrize("n", range(2, 9))
def test_coefficient_table_and_monic_identity(n):
    par = qms_affine(n, 1)
    assert set(par.constant) <= {0, 1, 2 - n}
    assert all(set(row) <= {-1, 0, 1} for row in par.coeff)
    inv = Fraction(1, n)
    for c, row in zip(par.constant, par.coeff):
        assert c + inv * sum(row) == inv
    assert monic_identity_exact(monic_qms_pencil(n, 1))


def test_n3_pencil_shape():
    P = monic_qms_pencil(3, 1)
    assert P.n_vars == 4
    for v in range(P.n_vars):
        F = P.coefficient(v)
        assert F.shape == (9, 9)
        assert np.array_equal(F, np.diag(np.diag(F)))
        assert set(np.diag(F).real) <= {-1.0, 0.0, 1.0}


def test_pencil_at_zero_and_at_center():
    P = monic_qms_pencil(4, 2)
    M, lam = evaluate_pencil(P, np.zeros(P.n_vars))
    assert P.monic_check() and lam == 1.0 and np.array_equal(M, np.eye(32))
    par = qms_affine(4, 2)
    Y = par.shift_inverse(uniform_square(4, 2))
    assert np.allclose(Y, 0)


def test_pencil_matches_blockwise_evaluation():
    par = qms_affine(4, 2)
    P = monic_qms_pencil(4, 2)
    X = from_permutation([2, 0, 3, 1], 2)
    M, lam = evaluate_pencil(P, par.shift_inverse(X))
    direct = np.concatenate([np.linalg.eigvalsh(4 * X.blocks[k, l]) for k in range(4) for l in range(4)])
    assert np.allclose(np.sort(np.linalg.eigvalsh(M)), np.sort(direct), atol=1e-12)
    assert lam == pytest.approx(0, abs=1e-12)


def test_boundary_detection_matches_direct_check():
    par = qms_affine(3, 2)
    P = monic_qms_pencil(3, 2)
    Y = par.shift_inverse(random_qms(3, 2, 4))
    lo, hi = 1.0, 1.0
    while verify_magic(par.evaluate_shifted(hi * Y)).overall:
        hi *= 2
    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if evaluate_pencil(P, mid * Y)[1] >= 0 else (lo, mid)
    assert verify_magic(par.evaluate_shifted(lo * Y), 1e-9).overall
    assert not verify_magic(par.evaluate_shifted(hi * (1 + 1e-6) * Y), 0).overall


@pytest.mark.parametrize("n, expected", [(3, 4), (4, 5), (5, 8), (6, 9), (7, 12), (8, 13)])
def test_cycle_parameter_counts(n, expected):
    assert gqms_affine(cycle(n), 1).n_params == expected


@pytest.mark.parametrize("n", range(3, 7))
def test_complete_graph_adds_no_restriction(n):
    par = gqms_affine(complete(n), 1)
    assert par.n_params == (n - 1) ** 2 == qms_affine(n, 1).n_params


def test_non_regular_graph_is_rejected():
    with pytest.raises(ParametrizationError):
        gqms_affine(path(4), 1)


def test_composition_route_describes_same_family():
    G = cycle(6)
    joint, comp = gqms_affine(G, 1), gqms_affine_composed(G, 1)
    assert joint.n_params == comp.n_params
    rng = np.random.default_rng(0)
    F = rng.standard_normal((comp.n_params, 1, 1))
    X = comp.evaluate(F)
    assert joint.affine_residual(X) < 1e-10


def test_cycle_pencil_size():
    P = monic_gqms_pencil(C4, 2)
    assert P.n_vars == 20 and P.outer == 16 and P.monic_check()


def test_complete3_pencil_same_set_as_plain():
    rng = np.random.default_rng(1)
    par_g, par_q = gqms_affine(complete(3), 1), qms_affine(3, 1)
    Pg, Pq = monic_gqms_pencil(complete(3), 1), monic_qms_pencil(3, 1)
    for _ in range(50):
        X = par_q.evaluate(rng.uniform(-0.5, 1, (4, 1, 1)))
        a = evaluate_pencil(Pq, par_q.shift_inverse(X))[1] >= 0
        b = evaluate_pencil(Pg, par_g.shift_inverse(X))[1] >= 0
        assert par_g.affine_residual(X) < 1e-12 and a == b


@pytest.mark.parametrize("perm", dihedral_group(4))
def test_dihedral_permutation_squares_are_in_the_cycle_pencil(perm):
    par = gqms_affine(C4, 2)
    X = from_permutation(perm, 2)
    assert par.affine_residual(X) < 1e-12
    assert evaluate_pencil(monic_gqms_pencil(C4, 2), par.shift_inverse(X))[1] >= -1e-12


def test_membership_examples():
    assert membership_test(from_permutation([1, 0, 2, 3], 2)).agree
    r = membership_test(group_average(random_qms(4, 2, 0), cyclic_group(4)), C4)
    assert r.direct and r.pencil
    # subtract 0.1 I from one free block and repair through the parametrization
    par = qms_affine(4, 2)
    F = par.free_blocks(from_permutation([0, 1, 2, 3], 2)).copy()
    F[1] -= 0.1 * np.eye(2)
    r = membership_test(par.evaluate(F), par=par)
    assert not r.direct and not r.pencil


def test_membership_outside_slice():
    B = random_qms(3, 1, 0).blocks.copy()
    B[0, 0] += 0.01
    r = membership_test(BlockMatrix(B))
    assert not r.direct and not r.pencil and r.agree


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 3.0))
def test_membership_routes_agree_along_rays(seed, scale):
    par = qms_affine(3, 2)
    Y = par.shift_inverse(random_qms(3, 2, seed))
    X = par.evaluate_shifted(scale * Y)
    r = membership_test(X, par=par)
    if abs(r.pencil_min_eig) > 1e-6:
        assert r.agree


def test_golden_sdpa_file(tmp_path):
    out = tmp_path / "p.dat-s"
    export_sdpa(monic_qms_pencil(2, 1), out)
    assert out.read_text() == (DATA / "qms_n2_s1.dat-s").read_text()


def test_sdpa_header_matches_metadata(tmp_path):
    P = monic_gqms_pencil(C4, 2)
    out = tmp_path / "c4.dat-s"
    export_sdpa(P, out)
    c, mats, sizes, comments = sdp.read_sdpa(out)
    assert len(c) == P.n_vars and sizes == [2 * P.outer * P.s]
    assert any("n=4 s=2 graph=cycle:4" in line for line in comments)
    F0 = mats[0][0]
    assert np.array_equal(F0, -np.eye(64))


def test_json_roundtrip(tmp_path):
    P = monic_gqms_pencil(cycle(5), 1)
    out = tmp_path / "p.json"
    export_json(P, out)
    Q = load_json(out)
    assert Q.to_json() == P.to_json()
    with pytest.raises(ValueError):
        MonicPencil.from_json({"outer": 5, "vars": []})


def test_probe_on_permutation_square_is_trivial():
    res = arveson_dilation_probe(from_permutation([1, 2, 3, 0], 2), C4, directions=3)
    assert res.max_beta_norm <= 1e-6


def test_probe_on_center_finds_dilation():
    res = arveson_dilation_probe(uniform_square(4, 2), C4, directions=2)
    assert res.max_beta_norm >= 1e-2
    D = res.dilation
    assert verify_magic(D, 1e-7).overall
    assert graph_commutation_residual(D, C4) <= 1e-7


def test_probe_with_no_directions():
    assert arveson_dilation_probe(uniform_square(3, 1), None, directions=0).max_beta_norm == 0


@pytest.mark.parametrize("n, expected", [(9, 16), (10, 17)])
def test_larger_cycle_parameter_counts(n, expected):
    assert gqms_affine(cycle(n), 1).n_params == expected


def test_cycle_parametrization_sound_and_complete():
    par = gqms_affine(C4, 2)
    rng = np.random.default_rng(2)
    I = np.eye(2)
    for _ in range(100):
        F = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
        X = par.evaluate(F)
        assert np.abs(X.row_sums() - I).max() <= 1e-10 and np.abs(X.col_sums() - I).max() <= 1e-10
        assert graph_commutation_residual(X, C4) <= 1e-10
    for k in range(100):
        X = group_average(random_qms(4, 2, 300 + k), cyclic_group(4))
        assert par.affine_residual(X) <= 1e-8


@pytest.mark.parametrize("n, s", [(3, 1), (3, 2), (4, 1), (4, 2), (5, 1), (5, 2)])
def test_sampling_equivalence(n, s):
    par = qms_affine(n, s)
    P = monic_qms_pencil(n, s)
    rng = np.random.default_rng(10 * n + s)
    for _ in range(100):
        G = rng.standard_normal((par.n_params, s, s)) + 1j * rng.standard_normal((par.n_params, s, s))
        Y = 0.3 * (G + np.conj(np.swapaxes(G, 1, 2))) / 2
        lam = evaluate_pencil(P, Y)[1]
        if abs(lam) < 1e-9:
            continue
        assert (lam >= 0) == verify_magic(par.evaluate_shifted(Y), 1e-9).overall
