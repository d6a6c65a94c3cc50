import numpy as np
import pytest

from twocenter.geometry import Geometry
from twocenter.potentials import (
    CoulombParams,
    SWParams,
    coulomb_two_center,
    pt_exactly_solvable_2d,
    sw_spec,
)
from twocenter.separation import (
    BracketError,
    ModeLabels,
    SolverSettings,
    angular_eigenpair,
    angular_eigenvalues,
    angular_eigenvalues_fd,
    bispectral_solve,
    formulation_equivalence,
    joint_residuals,
    potential_curve,
    radial_lambda,
)

G1 = Geometry(1.0)

# reduced-precision settings for module tests; defaults are exercised in
# the acceptance suite
FAST = SolverSettings(n_basis=72, n_fd_radial=900, ode_rtol=1e-10,
                      eps_tol=1e-10, e_tol=1e-10, residual_grid=181)


@pytest.fixture(scope="module")
def h2plus_ground():
    return bispectral_solve(CoulombParams(1.0, 1.0, 0), G1,
                            ModeLabels(0, 0), s=FAST)


class TestAngular:
    def test_chebyshev_limit(self):
        free = coulomb_two_center(0.0, 0.0, 0, G1, include_azimuthal=False)
        lams = angular_eigenvalues(free, 0, 0.0, 11)
        assert np.max(np.abs(lams - np.arange(11) ** 2)) < 1e-10

    def test_chebyshev_a_scaling(self):
        g = Geometry(2.0)
        free = coulomb_two_center(0.0, 0.0, 0, g, include_azimuthal=False)
        lams = angular_eigenvalues(free, 0, 0.0, 11)
        assert np.max(np.abs(lams - np.arange(11) ** 2 / 4.0)) < 1e-10

    def test_legendre_limit_with_azimuthal(self):
        # m=0 gauge class: a^2 lambda = n(n+1) + 1/4 exactly
        spec = coulomb_two_center(0.0, 0.0, 0, G1)
        lams = angular_eigenvalues(spec, 0, 0.0, 6)
        n = np.arange(6)
        assert np.max(np.abs(lams - (n * (n + 1) + 0.25))) < 1e-10

    def test_two_method_cross_check(self):
        spec = coulomb_two_center(1.0, 1.0, 0, G1)
        l_sp = angular_eigenvalues(spec, 0, -1.0, 5)
        l_fd = angular_eigenvalues_fd(spec, -1.0, 5, n_grid=1500)
        assert np.max(np.abs(l_sp - l_fd)) < 1e-8

    def test_cross_check_asymmetric_sw(self):
        spec = sw_spec(SWParams(0.4, 0.3, 0.0), Geometry(1.3))
        l_sp = angular_eigenvalues(spec, 0, -0.5, 4)
        l_fd = angular_eigenvalues_fd(spec, -0.5, 4, n_grid=1500)
        assert np.max(np.abs(l_sp - l_fd)) < 1e-8

    def test_interior_singularity_rejected(self):
        spec = sw_spec(SWParams(0.4, 0.3, 0.2), G1)
        with pytest.raises(ValueError):
            angular_eigenvalues(spec, 0, 0.0, 3)

    def test_eigenpair_solves_equation(self):
        spec = coulomb_two_center(1.0, 0.5, 0, G1)
        E = -0.8
        lam, B = angular_eigenpair(spec, E, 2)
        eta = np.linspace(-0.9, 0.9, 31)
        resid = (-(1.0 - eta ** 2) * B(eta, 2) + eta * B(eta, 1)
                 + spec.G(eta) * B(eta) + E * eta ** 2 * B(eta) - lam * B(eta))
        assert np.max(np.abs(resid)) / np.max(np.abs(B(eta))) < 1e-9


class TestRadial:
    def test_exact_closed_form_point(self):
        # Z1=Z2=1, a=1, m=0, E=-1: U = exp(-cosh alpha) solves the reduced
        # equation exactly with eps = 3/4, i.e. lambda = -3/4
        spec = coulomb_two_center(1.0, 1.0, 0, G1)
        lam = radial_lambda(spec, 0, -1.0, 0, s=FAST)
        assert abs(lam + 0.75) < 1e-9

    def test_monotone_in_E(self):
        spec = coulomb_two_center(1.0, 1.0, 0, G1)
        Es = [-1.3, -0.9, -0.5]
        lams = [radial_lambda(spec, 0, E, 0, s=FAST) for E in Es]
        assert lams[0] < lams[1] < lams[2]

    def test_scaling_invariance_of_a2_lambda(self):
        # under (Z, a, E) -> (gZ, a/g, g^2 E) the reduced equation is
        # unchanged, so a^2 lambda is invariant
        gam = 2.0
        spec1 = coulomb_two_center(1.0, 0.8, 0, Geometry(1.2))
        spec2 = coulomb_two_center(gam, 0.8 * gam, 0, Geometry(1.2 / gam))
        l1 = radial_lambda(spec1, 0, -0.9, 0, s=FAST)
        l2 = radial_lambda(spec2, 0, -0.9 * gam ** 2, 0, s=FAST)
        assert abs(1.2 ** 2 * l1 - (1.2 / gam) ** 2 * l2) < 1e-8

    def test_free_threshold_limit(self):
        # F = 0: as E -> 0- the confinement widens logarithmically and the
        # lowest separation constant creeps to the threshold value 0
        spec = coulomb_two_center(0.0, 0.0, 0, G1, include_azimuthal=False)
        l1 = radial_lambda(spec, 0, -1e-2, 0, s=FAST)
        l2 = radial_lambda(spec, 0, -1e-4, 0, s=FAST)
        assert l1 < 0.0 and l2 < 0.0
        assert abs(l2) < abs(l1) < 0.3

    def test_node_count_excited(self):
        spec = coulomb_two_center(1.0, 1.0, 0, G1)
        l0 = radial_lambda(spec, 0, -0.6, 0, s=FAST)
        l1 = radial_lambda(spec, 0, -0.6, 1, s=FAST)
        assert l1 < l0  # more radial nodes -> lower separation constant


class TestBispectral:
    def test_ground_energy_benchmark(self, h2plus_ground):
        # reference: the R=2 one-electron two-center ground energy
        assert abs(h2plus_ground.E + 0.725893156) < 1e-6

    def test_lambda_gap(self, h2plus_ground):
        assert h2plus_ground.diagnostics["lambda_gap"] < 1e-9

    def test_joint_residuals(self, h2plus_ground):
        assert h2plus_ground.diagnostics["residual_H"] < 1e-6
        assert h2plus_ground.diagnostics["residual_K"] < 1e-6

    def test_parity_for_equal_charges(self, h2plus_ground):
        B = h2plus_ground.angular_fn
        eta = np.linspace(0.05, 0.9, 12)
        assert np.max(np.abs(B(eta) - B(-eta))) < 1e-10 * np.max(np.abs(B(eta)))

    def test_single_center_independent_of_a(self):
        sols = [bispectral_solve(CoulombParams(1.0, 0.0, 0), Geometry(a),
                                 ModeLabels(0, 0), s=FAST,
                                 compute_residuals=False)
                for a in (0.8, 1.6)]
        assert abs(sols[0].E - sols[1].E) < 1e-6
        assert abs(sols[0].E + 0.25) < 1e-7

    def test_exchange_symmetry(self):
        sA = bispectral_solve(CoulombParams(1.3, 0.6, 0), G1, ModeLabels(0, 0),
                              s=FAST, compute_residuals=False)
        sB = bispectral_solve(CoulombParams(0.6, 1.3, 0), G1, ModeLabels(0, 0),
                              s=FAST, compute_residuals=False)
        assert abs(sA.E - sB.E) < 1e-9
        eta = np.linspace(-0.9, 0.9, 9)
        ratio = sA.angular_fn(eta) / sB.angular_fn(-eta)
        assert np.max(np.abs(ratio / ratio[0] - 1.0)) < 1e-8

    def test_weak_center_still_binds_hydrogenically(self):
        # a pure Coulomb center binds at every charge; the (3,3) level of
        # Z = 0.02 sits at -Z^2/(4 N^2) with N = 7
        sol = bispectral_solve(CoulombParams(0.02, 0.0, 0), G1,
                               ModeLabels(3, 3),
                               s=SolverSettings(n_basis=48, n_fd_radial=600,
                                                ode_rtol=1e-8, eps_tol=1e-8),
                               compute_residuals=False)
        assert abs(sol.E + 0.02 ** 2 / (4.0 * 49.0)) < 1e-11

    def test_no_bound_state_raises(self):
        # repulsive radial channel: no joint root exists at any E <= 0
        spec = pt_exactly_solvable_2d(2.0, 0.0, 0.0, 0.0, G1)
        with pytest.raises(BracketError):
            bispectral_solve(spec, labels=ModeLabels(0, 1),
                             s=SolverSettings(n_basis=48, n_fd_radial=600,
                                              max_expand=8, e_min=-0.5,
                                              ode_rtol=1e-8, eps_tol=1e-8))

    def test_formulation_equivalence(self, h2plus_ground):
        res = formulation_equivalence(h2plus_ground)
        for key, val in res.items():
            assert val < 1e-6, (key, val)

    def test_formulation_negative_control(self, h2plus_ground):
        res = formulation_equivalence(h2plus_ground, gauge_power=-1.0)
        assert res["threed_xi"] > 1e-2
        assert res["threed_eta"] > 1e-2

    def test_labels_stable_under_refinement(self, h2plus_ground):
        refined = SolverSettings(n_basis=108, n_fd_radial=1400,
                                 ode_rtol=1e-11, eps_tol=1e-11, e_tol=1e-11)
        sol = bispectral_solve(CoulombParams(1.0, 1.0, 0), G1,
                               ModeLabels(0, 0), s=refined,
                               compute_residuals=False)
        assert sol.labels == h2plus_ground.labels
        assert abs(sol.E - h2plus_ground.E) < 1e-7


class TestPotentialCurve:
    def test_rows_and_monotonicity(self):
        rows = potential_curve(1.0, 1.0, 0, ModeLabels(0, 0), [1.0, 2.0, 4.0],
                               s=FAST)
        assert [r["R"] for r in rows] == [1.0, 2.0, 4.0]
        E = [r["E_electronic"] for r in rows]
        assert E[0] < E[1] < E[2]
        for r in rows:
            assert r["status"] == "ok"
            assert abs(r["E_total"] - (r["E_electronic"] + 1.0 / r["R"])) < 1e-14

    def test_single_center_no_repulsion(self):
        rows = potential_curve(1.0, 0.0, 0, ModeLabels(0, 0), [2.0], s=FAST)
        assert rows[0]["E_total"] == rows[0]["E_electronic"]

    def test_united_atom_switch(self):
        rows = potential_curve(1.0, 1.0, 0, ModeLabels(0, 0), [1e-4], s=FAST)
        assert rows[0]["status"] == "united-atom"
        assert abs(rows[0]["E_electronic"] + 1.0) < 1e-12

    def test_parallel_rows_identical(self):
        Rs = [1.5, 3.0]
        serial = potential_curve(1.0, 1.0, 0, ModeLabels(0, 0), Rs, s=FAST)
        parallel = potential_curve(1.0, 1.0, 0, ModeLabels(0, 0), Rs, s=FAST,
                                   workers=2)
        for r1, r2 in zip(serial, parallel):
            assert r1["E_electronic"] == r2["E_electronic"]
            assert r1["lambda"] == r2["lambda"]
