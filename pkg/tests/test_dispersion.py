import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_pop.dispersion import (
    ModelParams,
    asymmetric_drift_speed,
    bounded_domain_critical_mu,
    critical_mu,
    dispersion_value,
    minimal_wave_speed,
    neutral_curve_rows,
    neutral_frequency_relation,
    pattern_period,
    solve_branch_roots,
    stability_verdict,
    taylor_phase_plane,
    write_neutral_curve_csv,
)
from nonlocal_pop.errors import (
    ConfigurationError,
    InvalidBranchError,
    NonClosureError,
    PhaseSingularityError,
    ScanRangeError,
    SingularInputError,
)
from nonlocal_pop.kernel import Kernel

from oracles import bisection

# independent bisection oracles, frozen
Z1_THIRD = bisection(lambda z: math.tan(z) - z / 3, math.pi + 0.01, 1.5 * math.pi - 0.01)
Z1_ONE = bisection(lambda z: math.tan(z) - z, math.pi + 0.01, 1.5 * math.pi - 0.01)

KERNELS = [Kernel.box(3.0), Kernel.box_asymmetric(1.1), Kernel.gaussian(1.0),
           Kernel.exponential(2.0), Kernel.delta()]


def test_oracle_values():
    assert Z1_THIRD == pytest.approx(4.0781497648514, abs=1e-10)
    assert Z1_ONE == pytest.approx(4.4934094579091, abs=1e-10)


def test_model_params():
    p = ModelParams(0.05, 2.0, 1.0)
    assert p.sigma == 1.0 and p.mu == 0.05
    with pytest.raises(ConfigurationError):
        ModelParams(0.05, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        ModelParams(-0.1, 2.0, 1.0)
    assert ModelParams.from_sigma(0.01, 1.0) == ModelParams(0.01, 2.0, 1.0)


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.shape.value)
def test_dispersion_at_zero_is_sigma(kernel):
    assert dispersion_value(ModelParams(0.3, 3.0, 0.5), kernel, 0.0) == pytest.approx(2.5)


@settings(max_examples=80, deadline=None)
@given(idx=st.integers(0, len(KERNELS) - 1), xi=st.floats(-40, 40),
       d=st.floats(0.001, 2.0))
def test_dispersion_even(idx, xi, d):
    p = ModelParams(d, 2.0, 1.0)
    k = KERNELS[idx]
    assert abs(dispersion_value(p, k, xi) - dispersion_value(p, k, -xi)) <= 1e-14 * max(1, d * xi * xi)


def test_box_instability_at_small_d():
    p = ModelParams(0.05, 2.0, 1.0)
    xs = np.linspace(0, 20, 4001)
    assert dispersion_value(p, Kernel.box(3.0), xs).min() < 0


def test_gaussian_positive():
    xs = np.linspace(0, 30, 3001)
    assert np.all(dispersion_value(ModelParams(1.0, 2.0, 1.0), Kernel.gaussian(1.0), xs) > 0)


def test_stability_verdicts():
    assert not stability_verdict(ModelParams(0.05, 2, 1), Kernel.box(3.0)).stable
    assert stability_verdict(ModelParams(0.12, 2, 1), Kernel.box(3.0)).stable
    for d in (0.001, 0.05, 1.0):
        assert stability_verdict(ModelParams(d, 2, 1), Kernel.exponential(1.0)).stable


def test_stability_minimum_is_refined():
    p = ModelParams(0.05, 2, 1)
    rep = stability_verdict(p, Kernel.box(3.0))
    assert rep.min_value <= rep.phi_samples.min()
    # derivative vanishes at the refined minimizer
    h = 1e-5
    slope = (dispersion_value(p, Kernel.box(3.0), rep.min_xi + h)
             - dispersion_value(p, Kernel.box(3.0), rep.min_xi - h)) / (2 * h)
    assert abs(slope) < 1e-6
    assert len(rep.samples) == 2000


def test_scan_range_too_small():
    with pytest.raises(ScanRangeError):
        stability_verdict(ModelParams(0.05, 2, 1), Kernel.box(3.0), xi_max=1.0)


def test_stability_monotone_in_d():
    ds = np.linspace(0.01, 0.3, 59)
    verdicts = [stability_verdict(ModelParams(d, 2, 1), Kernel.box(3.0)).stable for d in ds]
    first = verdicts.index(True)
    assert all(verdicts[first:]) and not any(verdicts[:first])
    # the switch happens at the critical diffusion
    assert ds[first - 1] < critical_mu(3.0).mu_critical <= ds[first]


def test_branch_roots():
    roots = solve_branch_roots(1 / 3, 3)
    assert roots[0] == pytest.approx(Z1_THIRD, abs=1e-11)
    assert math.pi < roots[0] < 1.5 * math.pi
    assert roots[0] < roots[1] < roots[2]
    assert solve_branch_roots(1.0, 1)[0] == pytest.approx(Z1_ONE, abs=1e-11)


@pytest.mark.parametrize("coef", [0.1, 1 / 3, 0.9, 1.0, 2.0, 5.0])
def test_branch_root_residuals(coef):
    roots = solve_branch_roots(coef, 6)
    assert np.all(np.diff(roots) > 0)
    for z in roots:
        assert abs(math.tan(z) - coef * z) < 1e-10
        assert z > 0


def test_critical_mu_values():
    pt = critical_mu(3.0, 1)
    assert pt.z_j == pytest.approx(Z1_THIRD, abs=1e-11)
    assert pt.mu_critical == pytest.approx(-9 * math.sin(Z1_THIRD) / Z1_THIRD ** 3, rel=1e-12)
    assert 0.100 <= pt.mu_critical <= 0.115
    assert abs(math.tan(pt.z_j) - pt.z_j / 3) < 1e-10
    assert pt.tau == pytest.approx(pattern_period(3.0))


@pytest.mark.parametrize("N", [1.0, 2.0, 5.0])
def test_branches_ordered(N):
    assert critical_mu(N, 1).mu_critical > critical_mu(N, 3).mu_critical > critical_mu(N, 5).mu_critical > 0


@pytest.mark.parametrize("N", [0.3, 1.0, 2.7])
def test_critical_mu_scales_quadratically(N):
    assert critical_mu(2 * N).mu_critical / critical_mu(N).mu_critical == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("j", [0, 2, 4, -1, 1.5])
def test_even_branch_rejected(j):
    with pytest.raises(InvalidBranchError):
        critical_mu(3.0, j)


def test_critical_mu_is_neutral():
    # at d = sigma * mu_1 the dispersion minimum touches zero at xi0 = z1/N
    N = 2.0
    pt = critical_mu(N)
    p = ModelParams(pt.mu_critical, 2.0, 1.0)
    xi0 = pt.z_j / N
    assert dispersion_value(p, Kernel.box(N), xi0) == pytest.approx(0.0, abs=1e-12)
    rep = stability_verdict(p, Kernel.box(N))
    assert abs(rep.min_value) < 1e-12
    assert rep.min_xi == pytest.approx(xi0, abs=1e-5)


def test_pattern_period():
    assert pattern_period(3.0) == pytest.approx(2 * math.pi * 3 / Z1_THIRD, rel=1e-12)
    assert pattern_period(3.0) == pytest.approx(4.62, abs=0.005)
    assert pattern_period(1.0) == pytest.approx(1.54, abs=0.005)
    assert pattern_period(4.4) == 2 * pattern_period(2.2)


def test_bounded_domain():
    z, mu = bounded_domain_critical_mu(10.0)
    assert z == pytest.approx(Z1_ONE, abs=1e-10)
    xi = 2 * math.pi / 10
    assert mu == pytest.approx(-math.sin(Z1_ONE) / (xi * xi * Z1_ONE), rel=1e-12)
    assert mu == pytest.approx(0.5503, abs=1e-4)
    z2, mu2 = bounded_domain_critical_mu(20.0)
    assert z2 == z
    assert mu2 / mu == pytest.approx(4.0, abs=1e-12)


def test_minimal_speed():
    assert minimal_wave_speed(ModelParams(0.06, 2, 1)) == pytest.approx(0.4898979485566356)
    assert minimal_wave_speed(ModelParams(0.01, 2, 1)) == pytest.approx(0.2)
    assert minimal_wave_speed(ModelParams(0.0, 2, 1)) == 0.0


def test_asymmetric_drift_speed():
    s = asymmetric_drift_speed(2.85, 1.1)
    assert s < 0 and abs(s) == pytest.approx(0.22, abs=0.005)
    assert asymmetric_drift_speed(2 * math.pi / 1.1, 1.1) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(SingularInputError):
        asymmetric_drift_speed(0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(xi=st.floats(1e-3, 50), N=st.floats(0.05, 10))
def test_drift_speed_never_positive(xi, N):
    assert asymmetric_drift_speed(xi, N) <= 0
    assert asymmetric_drift_speed(-xi, N) <= 0


def test_neutral_frequency_relation():
    p = ModelParams(0.01, 2.0, 1.0)
    _, s = neutral_frequency_relation(p, Kernel.box_asymmetric(1.1), 2.85)
    assert s == pytest.approx(asymmetric_drift_speed(2.85, 1.1), rel=1e-12)
    assert abs(s) == pytest.approx(0.22, abs=0.005)
    for xi in (0.3, 1.0, 4.2):
        assert neutral_frequency_relation(p, Kernel.box(2.0), xi)[1] == 0.0


def test_neutral_frequency_residual_vanishes_at_root():
    N = 3.0
    p = ModelParams(0.05, 2.0, 1.0)
    k = Kernel.box_asymmetric(N)
    root = bisection(lambda x: dispersion_value(p, k, x), 0.5, 1.4)
    residual, _ = neutral_frequency_relation(p, k, root)
    assert abs(residual) < 1e-11


def test_phase_plane_closed_orbit():
    p = ModelParams(0.05, 2.0, 1.0)
    gamma = Kernel.box(3.0).second_moment_gamma()
    assert gamma == 1.5
    orbit = taylor_phase_plane(p, gamma, 1.05)
    assert orbit.return_error < 1e-5
    assert orbit.c.min() < 1.0 < orbit.c.max()
    assert orbit.c.min() > 1 / gamma
    # small-amplitude period of the linearized center
    curvature = 1.0 / (0.05 * (gamma - 1.0))
    assert orbit.period == pytest.approx(2 * math.pi / math.sqrt(curvature), rel=0.02)


def test_phase_plane_energy_conserved():
    # H = p^2/2 + V(c), V' = c (sigma - c) / (d (1 - gamma c)) is constant on orbits
    from scipy.integrate import quad
    d, gamma = 0.05, 1.5
    orbit = taylor_phase_plane(ModelParams(d, 2.0, 1.0), gamma, 1.08)
    V = np.array([quad(lambda c: c * (1 - c) / (d * (1 - gamma * c)), 1.0, c)[0] for c in orbit.c[::200]])
    H = 0.5 * orbit.p[::200] ** 2 + V
    assert np.ptp(H) < 1e-8 * max(1.0, abs(H).max())


def test_phase_plane_fixed_point():
    orbit = taylor_phase_plane(ModelParams(0.05, 2.0, 1.0), 1.5, 1.0)
    assert orbit.return_error == 0.0 and orbit.c.size == 1


def test_phase_plane_without_nonlocality_escapes():
    with pytest.raises(NonClosureError):
        taylor_phase_plane(ModelParams(0.05, 2.0, 1.0), 0.0, 1.05)


def test_phase_plane_singularity():
    # the potential diverges at c = 1/gamma, so only a start on that line is singular
    with pytest.raises(PhaseSingularityError):
        taylor_phase_plane(ModelParams(0.05, 2.0, 1.0), 2.0, 0.5)


def test_phase_plane_large_orbit_stays_clear_of_singularity():
    orbit = taylor_phase_plane(ModelParams(0.05, 2.0, 1.0), 1.5, 1.9, arc_steps=200000)
    assert orbit.c.min() > 1 / 1.5
    assert orbit.return_error < 1e-5


def test_neutral_curve_rows(tmp_path):
    rows = neutral_curve_rows([1.0, 2.0, 3.0], [1, 3])
    mu1 = [r.mu_critical for r in rows if r.branch_index == 1]
    assert mu1[1] / mu1[0] == pytest.approx(4.0) and mu1[2] / mu1[0] == pytest.approx(9.0)
    for a, b in zip(rows[::2], rows[1::2]):
        assert a.N == b.N and a.mu_critical > b.mu_critical
    with pytest.raises(InvalidBranchError):
        neutral_curve_rows([1.0], [2])
    path = tmp_path / "curve.csv"
    write_neutral_curve_csv(rows, path)
    with open(path) as fh:
        table = list(csv.DictReader(fh))
    assert list(table[0]) == ["N", "j", "z_j", "mu_critical", "tau"]
    assert float(table[4]["mu_critical"]) == pytest.approx(critical_mu(3.0).mu_critical)
