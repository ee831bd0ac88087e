import numpy as np
import pytest
from scipy.sparse.linalg import eigs

from nleig.errors import (ConfigError, DegenerateParameter, NoBoundState,
                          NonSymmetricGrid, UnknownModel)
from nleig.models import (ModelSpec, build_model, dnls_exact_spectrum,
                          dnls_simplicity_window, toy_exact_nonlinear_pair,
                          toy_exact_spectrum, twodelta_eigenvalue_roots)
from nleig.spectra import compute_eigentriple
from nleig.symmetry import operator_commutation_residual

from conftest import make_toy


def smallest_eigs(problem, k, sigma):
    vals = eigs(problem.operator.matrix, k=k, sigma=sigma,
                return_eigenvectors=False)
    return np.sort_complex(vals)


# ----------------------------------------------------------------- exact toy

def test_toy_exact_spectrum_basic():
    assert toy_exact_spectrum(0.5, 3) == [0.25, 1.0, 4.0, 9.0]
    assert toy_exact_spectrum(1.2, 2) == pytest.approx([1.44, 1.0, 4.0])


def test_toy_exact_spectrum_integer_alpha_rejected():
    with pytest.raises(DegenerateParameter):
        toy_exact_spectrum(0.0, 3)
    with pytest.raises(DegenerateParameter):
        toy_exact_spectrum(2.0, 3)


def test_toy_exact_nonlinear_pair():
    mu, descriptor = toy_exact_nonlinear_pair(0.5, 0.0)
    assert mu == 0.25
    grid = make_toy(0.5, 128).grid
    psi = descriptor(grid)
    assert abs(psi.values[0] - np.exp(1j * 0.5 * np.pi / 2) / np.sqrt(np.pi)) < 1e-14
    mu2, _ = toy_exact_nonlinear_pair(0.5, 0.1)
    assert abs(mu2 - (0.25 - 0.1 / np.pi)) < 1e-15
    mu3, _ = toy_exact_nonlinear_pair(1.2, 1.0)
    assert abs(mu3 - (1.44 - 1.0 / np.pi)) < 1e-15


def test_toy_operator_two_smallest_eigenvalues():
    problem = make_toy(0.5, 2048)
    vals = smallest_eigs(problem, 2, 0.1)
    assert abs(vals[0] - 0.25) < 1e-6
    assert abs(vals[1] - 1.0) < 1e-6


def test_toy_discrete_convergence_order():
    # second-order convergence of the two smallest eigenvalues
    errors = {0.25: [], 1.0: []}
    for n in (256, 511, 1021):
        problem = make_toy(0.5, n)
        vals = smallest_eigs(problem, 2, 0.1)
        errors[0.25].append(abs(vals[0] - 0.25))
        errors[1.0].append(abs(vals[1] - 1.0))
    for exact, errs in errors.items():
        for e1, e2 in zip(errs, errs[1:]):
            order = np.log2(e1 / e2)
            assert 1.7 <= order <= 2.3, (exact, errs)


# ---------------------------------------------------------------------- dnls

def _sorted_key(vals):
    return np.array(sorted(vals, key=lambda z: (round(z.real, 9), round(z.imag, 9))))


@pytest.mark.parametrize("big_n", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.6])
def test_dnls_assembled_matches_formula(big_n, gamma):
    problem = build_model(ModelSpec("dnls", {"N": big_n, "gamma": gamma}))
    dense = np.linalg.eigvals(problem.operator.matrix.toarray())
    exact = dnls_exact_spectrum(big_n, gamma)
    assert np.max(np.abs(_sorted_key(dense) - _sorted_key(exact))) < 1e-12


def test_dnls_exact_values():
    assert dnls_exact_spectrum(1, 0.0) == pytest.approx([-1.0, 1.0])
    vals = dnls_exact_spectrum(2, 0.0)
    assert np.allclose(vals, [-1.618034, -0.618034, 0.618034, 1.618034],
                       atol=1e-6)
    c = dnls_exact_spectrum(1, 1.2)
    assert np.allclose(sorted(z.imag for z in c),
                       [-np.sqrt(0.44), np.sqrt(0.44)])
    assert all(abs(z.real) < 1e-15 for z in c)


def test_dnls_realness_window():
    for big_n in (1, 3, 5):
        w = dnls_simplicity_window(big_n)
        inside = dnls_exact_spectrum(big_n, 0.99 * w)
        outside = dnls_exact_spectrum(big_n, 1.01 * w)
        assert all(abs(z.imag) < 1e-12 for z in inside)
        assert any(abs(z.imag) > 0 for z in outside)


def test_dnls_requires_n():
    with pytest.raises(ConfigError):
        ModelSpec("dnls", {"gamma": 0.3})


# ----------------------------------------------------------------- two delta

def test_twodelta_roots_satisfy_equation():
    tau, gamma = 1.2, 0.0
    roots = twodelta_eigenvalue_roots(tau, gamma)
    assert roots, "expected at least one root"
    for mu in roots:
        assert mu < 0
        s = np.sqrt(-mu)
        lhs = np.exp(-4 * tau * s)
        rhs = 4 / (1 + gamma**2) * (-mu - s + gamma**2 / 4)
        assert abs(lhs - rhs) <= 1e-12


def test_twodelta_no_bound_state():
    with pytest.raises(NoBoundState):
        twodelta_eigenvalue_roots(0.5, 0.0)  # (1+g^2) tau = 0.5 <= 1


def test_twodelta_build_is_pt_symmetric():
    problem = build_model(ModelSpec("two_delta", {"tau": 1.2, "gamma": 0.4},
                                    n=801))
    res = operator_commutation_residual(problem.symmetry("PT"),
                                        problem.operator, probes=8)
    assert res <= 1e-10


# ------------------------------------------------------------------ 2D models

def test_sho6_gamma0_multiplicity_pattern():
    problem = build_model(ModelSpec("sho6_2d", {"gamma": 0.0}, n=81))
    vals = smallest_eigs(problem, 6, 1.0).real
    s2 = np.sqrt(2)
    assert abs(vals[0] - s2) < 0.01
    assert np.all(np.abs(vals[1:3] - 2 * s2) < 0.02)  # multiplicity 2
    assert np.all(np.abs(vals[3:6] - 3 * s2) < 0.05)  # multiplicity 3
    assert abs(vals[1] - vals[2]) < 1e-10  # exact swap degeneracy


def test_gauss9_gamma0_real_operator():
    problem = build_model(ModelSpec("gauss9_2d",
                                    {"gamma": 0.0, "v0": 1.0, "a": 1.5}, n=41))
    assert np.max(np.abs(problem.operator.matrix.toarray().imag)) == 0.0


def test_model_symmetry_lists():
    toy = make_toy(0.5, 64)
    assert [op.name for op in toy.symmetries] == ["PT"]
    sho = build_model(ModelSpec("sho6_2d", {"gamma": 1.0}, n=21))
    assert [op.name for op in sho.symmetries] == ["PT", "P1T", "P2"]
    assert [op.conjugate for op in sho.symmetries] == [True, True, False]
    g9 = build_model(ModelSpec("gauss9_2d",
                               {"gamma": 0.1, "v0": 1.0, "a": 1.5}, n=21))
    assert [op.name for op in g9.symmetries] == ["P1T"]
    dn = build_model(ModelSpec("dnls", {"N": 2, "gamma": 0.3}))
    assert [op.name for op in dn.symmetries] == ["lattice-PT"]


def test_commutation_gate_for_all_declared_symmetries():
    cases = [
        ModelSpec("toy_robin", {"alpha": 0.5}, n=128),
        ModelSpec("sho6_2d", {"gamma": 2.0}, n=31),
        ModelSpec("gauss9_2d", {"gamma": 0.1, "v0": 1.0, "a": 1.5}, n=31),
        ModelSpec("dnls", {"N": 3, "gamma": 0.5}),
        ModelSpec("wire", {"I": 1.0}, n=201),
        ModelSpec("per_bloch", {"gamma": 0.2, "k": 0.7}, n=128),
        ModelSpec("two_delta", {"tau": 1.2, "gamma": 0.4}, n=401),
    ]
    for spec in cases:
        problem = build_model(spec)
        for op in problem.symmetries:
            res = operator_commutation_residual(op, problem.operator, probes=8)
            assert res <= 1e-10, (spec.name, op.name, res)


# -------------------------------------------------------------------- errors

def test_unknown_model_rejected():
    with pytest.raises(UnknownModel):
        ModelSpec("nosuch", {})


def test_low_resolution_rejected():
    with pytest.raises(ConfigError):
        ModelSpec("toy_robin", {"alpha": 0.5}, n=8)


def test_non_symmetric_grid_request_rejected():
    with pytest.raises(NonSymmetricGrid):
        build_model(ModelSpec("toy_robin", {"alpha": 0.5}, n=64,
                              symmetric_grid=False))


def test_per_bloch_degenerate_k_rejected():
    for k in (0.0, np.pi):
        with pytest.raises(DegenerateParameter):
            build_model(ModelSpec("per_bloch", {"gamma": 0.1, "k": k}, n=64))


def test_missing_parameters_rejected():
    with pytest.raises(ConfigError):
        build_model(ModelSpec("sho6_2d", {}, n=21))


def test_sho6_gamma2_eigentriple_reference_value():
    # coarse-grid sanity; the acceptance suite pins the 161^2 values
    problem = build_model(ModelSpec("sho6_2d", {"gamma": 2.0}, n=61))
    triple = compute_eigentriple(problem, 2.0)
    assert abs(triple.mu0 - 2.096) < 0.05
    assert abs(triple.mu0.imag) < 1e-9
