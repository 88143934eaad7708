import cmath

import numpy as np
import pytest

from conftest import cached_evolve
from floquet_fano import presets
from floquet_fano.errors import ConfigError, NonFiniteStateError
from floquet_fano.evolution import (
    EvolutionConfig,
    build_cap,
    evolve,
    initial_state,
    rhs,
    rk4_step,
    sample_schedule,
    write_series_csv,
)
from floquet_fano.model import ModelConfig

FIG3 = presets.fig3_config()
FIG4B = presets.fig4b_config()


def small_evo(**overrides):
    params = dict(M=50, w=20, gamma0=0.6, dt=2e-3, t_max=10.0, initial="B")
    params.update(overrides)
    return EvolutionConfig(**params)


class TestEvolutionConfig:
    def test_desk_preset(self):
        evo = EvolutionConfig.desk()
        assert (evo.M, evo.w, evo.dt, evo.t_max) == (1500, 900, 2e-3, 2e4)

    def test_paper_preset(self):
        evo = EvolutionConfig.paper()
        assert (evo.M, evo.w, evo.dt) == (5000, 3000, 1e-3)

    def test_validation(self):
        with pytest.raises(ConfigError):
            EvolutionConfig(M=100, w=100, initial="B")
        with pytest.raises(ConfigError):
            EvolutionConfig(M=100, w=50, dt=-1e-3)
        with pytest.raises(ConfigError):
            EvolutionConfig(M=100, w=50, gamma0=-0.1)
        with pytest.raises(ConfigError):
            EvolutionConfig(M=100, w=50, initial="C")

    def test_resolved_stride_caps_storage(self):
        evo = EvolutionConfig.desk()
        n_steps = evo.t_max / evo.dt
        assert n_steps / evo.resolved_stride() <= 200_000

    def test_stability_advisory(self):
        assert not EvolutionConfig.desk().stability_advisory(FIG3)
        assert EvolutionConfig.desk(dt=1.0).stability_advisory(FIG3)


class TestCapProfile:
    def test_desk_values(self):
        cap = build_cap(EvolutionConfig.desk())
        m = np.arange(-1500, 1501)
        assert cap.gamma_m[m == 0] == 0.0
        assert cap.gamma_m[m == 600] == 0.0          # last CAP-free site
        assert cap.gamma_m[m == 1500] == pytest.approx(0.6)
        assert cap.gamma_m[m == -1500] == pytest.approx(0.6)
        # halfway up the ramp: gamma0 * 0.5^2
        assert cap.gamma_m[m == 1050] == pytest.approx(0.15)

    def test_symmetry_and_monotonicity(self):
        cap = build_cap(small_evo())
        g = cap.gamma_m
        assert np.allclose(g, g[::-1])
        outer = g[len(g) // 2:]
        assert np.all(np.diff(outer) >= 0)

    def test_cubic_exponent(self):
        cap = build_cap(small_evo(cap_exponent=3.0))
        m = np.arange(-50, 51)
        assert cap.gamma_m[m == 40] == pytest.approx(0.6 * 0.5**3)


class TestRhs:
    def test_single_site_hopping(self):
        evo = small_evo(gamma0=0.0)
        config = ModelConfig(e0=0.2, beta=1.0, eA=1.25, eB=1.30, gA=0.0,
                             gB=0.0, omega=2.3025, alpha=0.0)
        state = initial_state(evo)
        state.dB = 0j                # bare chain: excitation on site m=3 only
        state.c[evo.M + 3] = 1.0
        deriv = rhs(state, 0.0, config, evo, build_cap(evo))
        assert deriv.c[evo.M + 3] == pytest.approx(-1j * 0.2)
        assert deriv.c[evo.M + 2] == pytest.approx(1j * 0.5)
        assert deriv.c[evo.M + 4] == pytest.approx(1j * 0.5)
        assert deriv.dA == 0 and deriv.dB == 0

    def test_level_continuum_coupling(self):
        evo = small_evo(initial="B", gamma0=0.0)
        state = initial_state(evo)
        deriv = rhs(state, 0.0, FIG3, evo, build_cap(evo))
        assert deriv.dB == pytest.approx(-1j * FIG3.eB)
        assert deriv.c[evo.M] == pytest.approx(-1j * FIG3.gB)
        assert deriv.dA == 0

    def test_drive_phase(self):
        evo = small_evo(initial="A", gamma0=0.0)
        state = initial_state(evo)
        t = 0.7
        deriv = rhs(state, t, FIG3, evo, build_cap(evo))
        eps = FIG3.eA + FIG3.alpha * np.cos(FIG3.omega * t)
        assert deriv.dA == pytest.approx(-1j * eps)

    def test_cap_damps_edge_sites(self):
        evo = small_evo(gamma0=0.5)
        cap = build_cap(evo)
        state = initial_state(evo)
        state.c[-1] = 1.0            # site m=+M, full CAP strength
        deriv = rhs(state, 0.0, FIG3, evo, cap)
        assert deriv.c[-1].real == pytest.approx(-0.5)   # -gamma_M * c


class TestRk4Step:
    def test_matches_exact_free_phase(self):
        # undriven, uncoupled level: dB(t) = exp(-i eB t)
        evo = small_evo(initial="B", gamma0=0.0)
        config = ModelConfig(e0=0.0, beta=1.0, eA=1.25, eB=1.30, gA=0.0,
                             gB=0.0, omega=2.3025, alpha=0.0)
        cap = build_cap(evo)
        state = initial_state(evo)
        dt = 1e-2
        for k in range(100):
            state = rk4_step(state, k * dt, dt, config, evo, cap)
        assert state.dA == 0
        assert state.dB == pytest.approx(cmath.exp(-1j * config.eB), abs=1e-9)

    def test_fourth_order_convergence(self):
        # driven uncoupled level has the exact solution
        # dA(t) = exp(-i eA t - i chi sin(omega t)); the one-step error must
        # drop ~16x per dt halving
        config = ModelConfig(e0=0.0, beta=1.0, eA=1.25, eB=1.30, gA=0.0,
                             gB=0.0, omega=2.3025, alpha=1.081978 * 2.3025)
        evo = small_evo(M=2, w=1, initial="A", gamma0=0.0)
        cap = build_cap(evo)

        def endpoint_error(dt, t_end=2.0):
            state = initial_state(evo)
            steps = int(round(t_end / dt))
            for k in range(steps):
                state = rk4_step(state, k * dt, dt, config, evo, cap)
            exact = cmath.exp(-1j * (config.eA * t_end
                                     + config.chi * cmath.sin(config.omega * t_end)))
            return abs(state.dA - exact)

        ratio = endpoint_error(2e-2) / endpoint_error(1e-2)
        assert ratio == pytest.approx(16.0, abs=2.0)

    def test_linearity(self):
        evo = small_evo(gamma0=0.0)
        cap = build_cap(evo)
        a = initial_state(evo)
        a.c[evo.M + 1] = 0.5j
        scaled = initial_state(evo)
        scaled.dB = 3.0 * a.dB
        scaled.c = 3.0 * a.c
        one = rk4_step(a, 0.0, 1e-2, FIG3, evo, cap)
        other = rk4_step(scaled, 0.0, 1e-2, FIG3, evo, cap)
        assert other.dB == pytest.approx(3.0 * one.dB)
        assert np.allclose(other.c, 3.0 * one.c)


class TestCompiledKernelAgreement:
    def test_evolve_matches_reference_stepper(self):
        # short run, no stride: the compiled path and the plain-numpy RK4
        # must produce the same survival probability to near machine level
        evo = small_evo(M=30, w=10, t_max=5.0, sample_stride=250, initial="B")
        series = evolve(FIG3, evo)

        cap = build_cap(evo)
        state = initial_state(evo)
        for prev_t, sample_t, expected_p in zip(series.times[:-1], series.times[1:],
                                                series.p_survival[1:]):
            # same interval subdivision as the compiled path
            nsteps = max(1, int(np.ceil((sample_t - prev_t) / evo.dt - 1e-12)))
            h = (sample_t - prev_t) / nsteps
            for k in range(nsteps):
                state = rk4_step(state, prev_t + k * h, h, FIG3, evo, cap)
            assert abs(state.dB) ** 2 == pytest.approx(expected_p, abs=1e-11)


class TestSampleSchedule:
    def test_contains_stroboscopic_times(self):
        evo = small_evo(t_max=50.0, sample_stride=1000)
        times, strobe = sample_schedule(evo, FIG3.omega)
        period = 2 * np.pi / FIG3.omega
        strobes = times[strobe]
        expected = np.arange(0, int(50.0 / period) + 1) * period
        assert np.allclose(strobes, expected, atol=1e-9)

    def test_sorted_and_unique(self):
        evo = small_evo(t_max=50.0, sample_stride=137)
        times, _ = sample_schedule(evo, FIG3.omega)
        assert np.all(np.diff(times) > 0)

    def test_origin_is_strobe(self):
        times, strobe = sample_schedule(small_evo(), FIG3.omega)
        assert times[0] == 0.0 and strobe[0]


class TestIntegratorHygiene:
    def test_norm_conserved_without_cap(self):
        # gamma0=0 and t_max short enough that the wavefront (speed <= beta)
        # cannot reach the hard wall: the evolution is unitary
        evo = EvolutionConfig(M=200, w=100, gamma0=0.0, dt=2e-3,
                              t_max=100.0, sample_stride=5000, initial="B")
        series = evolve(FIG3, evo)
        assert np.max(np.abs(series.norm - 1.0)) < 1e-8

    def test_norm_monotone_with_cap(self):
        evo = EvolutionConfig(M=200, w=120, gamma0=0.6, dt=2e-3,
                              t_max=300.0, sample_stride=5000, initial="A")
        series = evolve(FIG4B, evo)   # A decays fast; waves reach the CAP
        assert np.all(np.diff(series.norm) <= 1e-12)
        assert series.norm[-1] < 1.0

    def test_dt_halving(self):
        def end_p(dt):
            evo = EvolutionConfig(M=200, w=120, gamma0=0.6, dt=dt,
                                  t_max=200.0, sample_stride=int(0.2 / dt),
                                  initial="A")
            return evolve(FIG4B, evo).p_survival[-1]

        assert abs(end_p(2e-3) - end_p(1e-3)) < 1e-6

    @pytest.mark.slow
    def test_boundary_insensitivity(self):
        # doubling the chain (CAP onset pushed from site 600 to 2100) must
        # not move P_B: the absorbing boundary emulates the infinite lattice
        runs = {}
        for M in (1500, 3000):
            evo = EvolutionConfig(M=M, w=900, dt=2e-3, t_max=6000.0,
                                  sample_stride=100, initial="B")
            runs[M] = cached_evolve(FIG3, evo)
        assert np.array_equal(runs[1500].times, runs[3000].times)
        assert np.max(np.abs(runs[1500].p_survival - runs[3000].p_survival)) < 1e-7


class TestFailureModes:
    def test_non_finite_state_carries_partial_series(self):
        # wildly unstable step size: RK4 amplifies to overflow quickly
        config = ModelConfig(e0=0.0, beta=1.0, eA=1e4, eB=1.30, gA=0.05,
                             gB=0.05, omega=2.3025, alpha=0.0)
        evo = EvolutionConfig(M=20, w=10, gamma0=0.0, dt=1.0, t_max=400.0,
                              sample_stride=1, initial="A")
        with pytest.raises(NonFiniteStateError) as excinfo:
            evolve(config, evo)
        partial = excinfo.value.partial
        assert partial is not None
        assert len(partial.times) < 401
        assert np.all(np.isfinite(partial.norm))


class TestSeriesOutput:
    def test_csv_format(self, tmp_path):
        evo = small_evo(M=30, w=10, t_max=2.0, sample_stride=500)
        series = evolve(FIG3, evo)
        path = tmp_path / "series.csv"
        write_series_csv(series, path)
        raw = path.read_bytes()
        lines = raw.decode().split("\r\n")
        assert lines[0] == "t,p_survival,norm"
        assert len(lines) == len(series.times) + 2    # header + rows + trailing
        first = lines[1].split(",")
        assert first[0] == f"{series.times[0]:.12e}"

    def test_at_time_lookup(self):
        evo = small_evo(M=30, w=10, t_max=2.0, sample_stride=100)
        series = evolve(FIG3, evo)
        assert series.at_time(0.0) == pytest.approx(1.0)
        assert series.pB is not None and series.pA is None
