import time
from fractions import Fraction

import numpy as np
import pytest

from gqms.graphs import cycle
from gqms.magic import from_permutation, graph_commutation_residual, random_qms, verify_magic
from gqms.separation import (SearchConfig, Variant, c4_dilation, candidate_seed, certificate_to_json,
                             check_certificate_json, coefficients, counterexample_search, dual_certificate,
                             hardcoded_z4, make_candidate, phi, primal_feasibility, psi, separation_operator,
                             span_residual, subspace_basis, validate_certificate, ze_basis)


def psi_by_loops(A):
    n, s = A.n, A.s
    al, be, ga = (float(c) for c in coefficients(n))
    out = np.zeros((n * n * s, n * n * s), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    if i == j or k == l:
                        continue
                    blk = (-al * np.eye(s) + be * A[i, k] + be * A[j, l] + ga * A[i, l] + ga * A[j, k])
                    r, c = (i * n + k) * s, (j * n + l) * s
                    out[r:r + s, c:c + s] = blk
    return out


def phi_by_loops(A):
    n, s = A.n, A.s
    N = n * n * s
    out = np.zeros((N, N), dtype=complex)
    for p in range(n * n):
        out[p * s:(p + 1) * s, p * s:(p + 1) * s] += A[p // n, p % n]
        for q in range(n * n):
            out[p * s:(p + 1) * s, q * s:(q + 1) * s] -= A[p // n, p % n] @ A[q // n, q % n]
    return out


def test_coefficients_are_exact():
    assert coefficients(4) == (Fraction(1, 6), Fraction(3, 8), Fraction(1, 8))
    assert coefficients(3) == (Fraction(1, 2), Fraction(2, 3), Fraction(1, 3))
    with pytest.raises(ValueError):
        coefficients(2)


@pytest.mark.parametrize("n, s", [(3, 1), (3, 2), (4, 2)])
def test_operators_match_loop_definitions(n, s):
    A = random_qms(n, s, 5)
    assert np.abs(psi(A) - psi_by_loops(A)).max() < 1e-14
    assert np.abs(phi(A) - phi_by_loops(A)).max() < 1e-14
    op = separation_operator(A)
    assert np.allclose(op.M, op.M.conj().T)


@pytest.mark.parametrize("n, variant, dim", [(4, "row_and_col", 5), (4, "row_only", 8), (5, "row_only", 15),
                                              (3, "row_and_col", 1), (3, "row_only", 3)])
def test_ze_dimensions(n, variant, dim):
    Z = ze_basis(n, variant)
    assert Z.dimension == dim
    for z in Z.basis:
        assert np.abs(np.diag(z)).max() < 1e-12
        assert np.abs(z.sum(axis=1)).max() < 1e-12


def test_hardcoded_basis_spans_constraint_space():
    Z = ze_basis(4, Variant.ROW_AND_COL)
    assert Z.source == "hard-coded"
    from gqms.separation import ze_constraints
    from gqms.linalg import nullspace
    K = nullspace(ze_constraints(4, "row_and_col"))
    computed = [K[:, a].reshape(4, 4) for a in range(K.shape[1])]
    assert span_residual(hardcoded_z4(), computed) <= 1e-10
    assert span_residual(computed, hardcoded_z4()) <= 1e-10


def test_subspace_family_sizes():
    small = subspace_basis(4, 2, "row_and_col")
    assert len(small) == 100 and len(small.dropped) == 100
    assert len(small.orthonormal()) == 100
    big = subspace_basis(4, 2, "row_only")
    assert len(big) == 512
    assert len(big.orthonormal()) == 412


def test_identity_is_orthogonal_to_subspace():
    fam = subspace_basis(4, 1, "row_only")
    assert max(abs(np.trace(F)) for F in fam.elements) < 1e-12


def test_identity_permutation_primal_feasible_fast():
    t = time.monotonic()
    res = primal_feasibility(from_permutation([0, 1, 2, 3], 1))
    assert res.feasible
    assert time.monotonic() - t < 5
    assert res.min_eig >= -1e-6


def test_permutation_certificate_does_not_separate():
    cert = dual_certificate(from_permutation([1, 2, 3, 0], 2), Variant.ROW_AND_COL)
    assert cert.validated and cert.objective >= -1e-7
    assert not cert.separates


def test_rank_one_square_is_separated_and_revalidated():
    B = random_qms(3, 2, 1, rank=1)
    cert = dual_certificate(B)
    assert cert.separates
    rep = validate_certificate(B, cert.Y, claimed_objective=cert.objective)
    assert rep.ok and rep.objective == pytest.approx(cert.objective)
    # the witness direction lies in the subspace and the dual value bounds the objective
    assert cert.depth <= cert.objective + 1e-7
    obj = certificate_to_json(B, cert)
    assert check_certificate_json(obj).ok
    obj["objective"] = cert.objective + 1e-3
    assert not check_certificate_json(obj).ok


def test_certificate_with_broken_psd_is_rejected():
    B = random_qms(3, 2, 2, rank=1)
    cert = dual_certificate(B)
    Y = cert.Y.copy()
    Y[0, 0] -= 0.5
    rep = validate_certificate(B, Y)
    assert not rep.ok and any("PSD" in r or "trace" in r for r in rep.reasons)


@pytest.mark.parametrize("seed", range(3))
def test_c4_squares_are_compressions_of_projection_squares(seed):
    B = make_candidate(candidate_seed(7, seed), 2)
    d = c4_dilation(B)
    assert d.compression_error < 1e-12 and d.projection_error < 1e-12
    assert verify_magic(d.U).magic_residual < 1e-12
    assert graph_commutation_residual(d.U, cycle(4)) < 1e-12
    assert np.allclose(d.V.conj().T @ d.V, np.eye(2))


def test_search_is_deterministic_and_reports_seeds():
    cfg = SearchConfig(budget=4, seed=3)
    a, b = counterexample_search(cfg), counterexample_search(cfg)
    assert a.seeds == b.seeds == [candidate_seed(3, i) for i in range(4)]
    assert a.best_objective == b.best_objective
    assert a.evaluated == 4
    assert not a.found


@pytest.mark.parametrize("seed", range(2))
def test_primal_depth_matches_certificate_on_separated_squares(seed):
    res = primal_feasibility(random_qms(3, 2, seed, rank=1))
    assert res.status == "infeasible"
    assert res.certificate.separates
    assert res.depth == pytest.approx(res.certificate.objective, abs=1e-7)


def test_certificate_is_orthogonal_to_sampled_subspace_elements():
    B = random_qms(3, 2, 3, rank=1)
    cert = dual_certificate(B)
    fam = subspace_basis(3, 2, "row_only")
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = rng.standard_normal(len(fam))
        X = sum(c * F for c, F in zip(w, fam.elements))
        assert abs(np.trace(cert.Y @ X)) <= 1e-8


def test_quadratic_part_is_the_only_nonlinearity():
    A, A2 = random_qms(4, 2, 1), random_qms(4, 2, 2)
    lam = 0.3
    from gqms.magic import BlockMatrix
    from gqms.separation import col_map

    def linear_part(X):
        c = col_map(X)
        return separation_operator(X).M + c @ c.conj().T

    mix = BlockMatrix(lam * A.blocks + (1 - lam) * A2.blocks)
    assert np.abs(linear_part(mix) - lam * linear_part(A) - (1 - lam) * linear_part(A2)).max() < 1e-12


def test_hardcoded_elements_satisfy_constraints_exactly():
    for z in hardcoded_z4():
        zi = np.round(z.real).astype(int) + 1j * np.round(z.imag).astype(int)
        assert np.array_equal(zi, z)
        assert not np.diag(z).any() and not z.sum(axis=0).any() and not z.sum(axis=1).any()


def test_averaged_permutation_squares_are_never_accepted():
    from gqms.magic import cyclic_group, dihedral_group, group_average
    seen = []
    for g in dihedral_group(4):
        B = group_average(from_permutation(g, 2), cyclic_group(4))
        if any(np.allclose(B.blocks, C.blocks) for C in seen):
            continue
        seen.append(B)
        cert = dual_certificate(B)
        assert cert.objective >= -1e-8 and not cert.separates
    assert len(seen) == 6      # rotations are fixed, reflections fall into two classes
