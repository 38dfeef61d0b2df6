"""Shift-invert Arnoldi driver: exact small cases, certification, determinism."""

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from defectbench.analytic1d import ModelParams
from defectbench.eigensolve import (
    eigs_near,
    factorize_shifted,
    mean_of_cluster,
    select_cluster,
)
from defectbench.fem import Pencil, assemble_interval
from defectbench.meshing import uniform_interval_mesh

REGULAR = ModelParams(
    b=0.5,
    a_R=0.1069220800406739 + 0.08937533852238478j,
    c=-0.9634059612381408 + 0.5989684988897067j,
)
REGULAR_LAMBDA = 5.250721274740938 + 6.750931815875402j


def _diag_pencil(diag):
    n = len(diag)
    A = sp.diags(np.asarray(diag, dtype=complex)).tocsr()
    B = sp.eye(n, dtype=complex, format="csr")
    return Pencil(A=A, B=B, free=np.arange(n))


def test_diagonal_pencil_exact():
    pencil = _diag_pencil(np.arange(1.0, 101.0))
    spec = eigs_near(pencil, 37.2, 3)
    idx = select_cluster(spec, 37.2, 3)
    got = np.sort(spec.values[idx].real)
    assert np.allclose(got, [36.0, 37.0, 38.0], atol=1e-10)
    assert np.max(spec.residuals[idx]) < 1e-10


def test_shift_equal_to_eigenvalue_is_recovered():
    # sigma exactly on an eigenvalue makes A - sigma B singular; the driver
    # must nudge the shift and still converge
    pencil = _diag_pencil(np.arange(1.0, 51.0))
    spec = eigs_near(pencil, 25.0, 1)
    idx = select_cluster(spec, 25.0, 1)
    assert abs(spec.values[idx][0] - 25.0) < 1e-10


def test_shifted_factorization_roundtrip():
    rng = np.random.default_rng(11)
    M = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
    A = sp.csr_matrix(M + M.T)  # complex symmetric
    B = sp.eye(50, dtype=complex, format="csr")
    pencil = Pencil(A=A, B=B, free=np.arange(50))
    sigma = 0.3 + 0.1j
    fact = factorize_shifted(pencil, sigma)
    x = rng.normal(size=50) + 1j * rng.normal(size=50)
    y = fact.solve(x)
    back = (A - sigma * B) @ y
    assert np.linalg.norm(back - x) < 1e-10 * np.linalg.norm(x)


def test_matches_dense_solver_on_coarse_fem_pencil():
    pencil = assemble_interval(uniform_interval_mesh(12, force_node=0.5),
                               REGULAR, 1)
    dense = sla.eig(pencil.A.toarray(), pencil.B.toarray(), right=False)
    spec = eigs_near(pencil, REGULAR_LAMBDA, 3)
    idx = select_cluster(spec, REGULAR_LAMBDA, 3)
    for lam in spec.values[idx]:
        assert np.min(np.abs(dense - lam)) < 1e-9 * abs(lam)


def test_shift_independence_of_cluster():
    pencil = assemble_interval(uniform_interval_mesh(32, force_node=0.5),
                               REGULAR, 2)
    target = REGULAR_LAMBDA
    spec1 = eigs_near(pencil, target, 3)
    spec2 = eigs_near(pencil, target * (1 + 0.05), 3)
    c1 = np.sort_complex(spec1.values[select_cluster(spec1, target, 3)])
    c2 = np.sort_complex(spec2.values[select_cluster(spec2, target, 3)])
    assert np.max(np.abs(c1 - c2)) < 1e-8 * abs(target)


def test_deterministic_across_calls():
    pencil = assemble_interval(uniform_interval_mesh(16, force_node=0.5),
                               REGULAR, 1)
    spec1 = eigs_near(pencil, REGULAR_LAMBDA, 3)
    spec2 = eigs_near(pencil, REGULAR_LAMBDA, 3)
    assert np.array_equal(spec1.values, spec2.values)
    assert np.array_equal(spec1.vectors, spec2.vectors)


def test_vectors_are_b_normalized():
    pencil = assemble_interval(uniform_interval_mesh(16, force_node=0.5),
                               REGULAR, 1)
    spec = eigs_near(pencil, REGULAR_LAMBDA, 3)
    for j in range(spec.vectors.shape[1]):
        v = spec.vectors[:, j]
        assert abs(v.conj() @ (pencil.B @ v) - 1.0) < 1e-10
        k = int(np.argmax(np.abs(v)))
        assert v[k].real > 0 and abs(v[k].imag) < 1e-10 * abs(v[k])


def test_mean_of_cluster_is_harmonic():
    # mean of the inverses, inverted: {1, 1/3} -> 1/2
    assert mean_of_cluster(np.array([1.0, 1 / 3])) == pytest.approx(0.5)
    assert mean_of_cluster(np.array([2.0 + 0j])) == pytest.approx(2.0)


def test_select_cluster_orders_by_distance():
    class FakeSpec:
        values = np.array([10.0, 1.0, 3.0, 2.5])

    idx = select_cluster(FakeSpec, 2.6, 2)
    assert set(FakeSpec.values[idx]) == {2.5, 3.0}
