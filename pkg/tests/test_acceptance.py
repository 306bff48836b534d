"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line straight to the
terminal (also under ``pytest -v``) and then asserts the same condition.
"""

import json
import math
import time

import numpy as np
import pytest

from bellsim import io as bio
from bellsim.bell import s_values
from bellsim.correlation import CorrelationModel, correlation_mc, expectation
from bellsim.geometry import SI, SpacetimePoint
from bellsim.gw_background import BackgroundConfig, riemann_R1010, sample_background, strain_at
from bellsim.harness import main
from bellsim.oscillator import (
    IntegratorConfig,
    OscillatorState,
    evolve_closed_form,
    freefall_state,
    integrate,
    integrate_in_background,
    phase_correlation,
)

ROOT2 = math.sqrt(2)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, seconds, budget):
        ok = ok and seconds < budget
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail} "
                  f"({seconds:.2f}s, budget {budget:g}s)")
        assert ok, detail
    return emit


def cli(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_criterion_1_canonical_chsh(report, capsys):
    t0 = time.perf_counter()
    code, out, err = cli(["chsh", "--model", "cosine", "--settings", "0,90,45,-45", "--analytic"],
                         capsys)
    dt = time.perf_counter() - t0
    S = json.loads(out)["results"]["S"]
    err_abs = abs(S - ROOT2)
    report(1, "analytic S at canonical settings", code == 0 and err_abs <= 1e-12,
           f"S={S!r}, |S-sqrt2|={err_abs:.1e} <= 1e-12", dt, 1)


def _scan_and_random(model_name, bound, capsys):
    code, out, _ = cli(["scan", "--model", model_name, "--grid", "16", "--refine", "40"], capsys)
    s_max = json.loads(out)["results"]["S_max"]
    x = np.random.default_rng(20240).uniform(0, 2 * np.pi, (4, 100_000))
    worst = float(np.max(np.abs(s_values(CorrelationModel(model_name), *x))))
    return code, s_max, worst


def test_criterion_2_cosine_bound(report, capsys):
    t0 = time.perf_counter()
    code, s_max, worst = _scan_and_random("cosine", ROOT2, capsys)
    dt = time.perf_counter() - t0
    ok = code == 0 and ROOT2 - 1e-6 <= s_max <= ROOT2 + 1e-9 and worst <= ROOT2 + 1e-9
    report(2, "cosine scan attains sqrt2 and never exceeds it", ok,
           f"S_max={s_max!r}, max over 1e5 random settings={worst!r}", dt, 30)


def test_criterion_3_sign_bound(report, capsys):
    t0 = time.perf_counter()
    code, s_max, worst = _scan_and_random("sign", 1.0, capsys)
    dt = time.perf_counter() - t0
    ok = code == 0 and 1 - 1e-6 <= s_max <= 1 + 1e-9 and worst <= 1 + 1e-9
    report(3, "sign-model scan attains 1 and never exceeds it", ok,
           f"S_max={s_max!r}, max over 1e5 random settings={worst!r}", dt, 30)


def test_criterion_4_correlation_law(report):
    model = CorrelationModel("cosine")
    thetas = np.arange(32) * (2 * math.pi / 32)
    t0 = time.perf_counter()
    good_reps = 0
    worst_z = 0.0
    for rep in range(100):
        ok_rep = True
        for j, theta in enumerate(thetas):
            est = correlation_mc(model, float(theta), 100_000, seed=[rep, j])
            z = abs(est.value - expectation(model, theta)) / est.stderr
            worst_z = max(worst_z, z)
            ok_rep &= z <= 4
        good_reps += ok_rep
    dt = time.perf_counter() - t0
    report(4, "MC matches cos(theta) at 32 angles", good_reps >= 99,
           f"{good_reps}/100 repetitions with all 32 angles within 4 stderr "
           f"(worst |z|={worst_z:.2f})", dt, 60)


def test_criterion_5_oscillator(report):
    omega, ell0 = 2.0, 1.0
    period = 2 * math.pi / omega
    s0 = OscillatorState(ell0, 0.0)

    def max_err(steps_per_period, periods):
        n = steps_per_period * periods
        cfg = IntegratorConfig(period / steps_per_period, n)
        traj = integrate(s0, lambda t: omega**2, cfg, c=1.0)
        exact = np.array([evolve_closed_form(s0, omega, t).ell for t in traj.times])
        return float(np.max(np.abs(traj.ell - exact)))

    t0 = time.perf_counter()
    err = max_err(1000, 10)
    order = math.log2(max_err(50, 10) / max_err(100, 10))
    dt = time.perf_counter() - t0
    report(5, "RK4 against closed form", err <= 1e-8 * ell0 and abs(order - 4) <= 1,
           f"max error {err:.2e} <= 1e-8, observed order {order:.3f}", dt, 5)


def test_criterion_6_curvature(report):
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(6)
    cfg = BackgroundConfig(n_modes=1, amplitude_scale=1e-7, freq_min=0.5, freq_max=50.0)
    for seed in range(100):
        bg = sample_background(cfg, seed=seed)
        m = bg.modes[0]
        p = SpacetimePoint(rng.uniform(0, 5 * m.period), *rng.uniform(-1e6, 1e6, 3))
        step = m.period / 1e4
        h = [strain_at(bg, SpacetimePoint(p.t + s * step, p.x, p.y, p.z))[1, 1]
             for s in (-1, 0, 1)]
        fd = -(h[0] - 2 * h[1] + h[2]) / step**2 / (2 * SI.c**2)
        exact = riemann_R1010(bg, p)
        peak = m.omega_g**2 * abs(m.e[1, 1]) / SI.c**2
        worst = max(worst, abs(exact - fd) / max(abs(exact), peak))
    dt = time.perf_counter() - t0
    report(6, "R_1010 against finite differences of the strain", worst <= 1e-6,
           f"worst relative error {worst:.2e} over 100 single-mode backgrounds", dt, 5)


# Sampling every ~1.36 shortest periods decorrelates successive samples of
# independent backgrounds; the free-fall start removes the linear drift.
PHASE_CFG = dict(n_modes=128, amplitude_scale=1e-10, freq_min=1.0, freq_max=10.0)
N_PHASE = 10_000
STRIDE = 34


def _trajectory(bg, position, t_min):
    # shared step so that series from different backgrounds line up
    icfg = IntegratorConfig(t_min / 25, STRIDE * (N_PHASE - 1), record_every=STRIDE)
    return integrate_in_background(freefall_state(bg, position), bg, position, icfg)


def test_criterion_7_phase_correlation(report):
    t0 = time.perf_counter()
    bg = sample_background(BackgroundConfig(**PHASE_CFG), seed=101)
    other = sample_background(BackgroundConfig(**PHASE_CFG), seed=202)
    t_min = min(bg.shortest_period, other.shortest_period)
    origin = np.zeros(3)
    near = np.array([1e5, 0.0, 0.0])
    base = _trajectory(bg, origin, t_min)
    r_same = phase_correlation(base, _trajectory(bg, origin, t_min))
    r_near = phase_correlation(base, _trajectory(bg, near, t_min))
    r_indep = phase_correlation(base, _trajectory(other, origin, t_min))
    dt = time.perf_counter() - t0
    bound = 4 / math.sqrt(N_PHASE)
    wavelength = 2 * math.pi * SI.c / PHASE_CFG["freq_max"]
    ok = len(base) == N_PHASE and r_same == 1.0 and r_near >= 0.99 and abs(r_indep) <= bound
    report(7, "phase correlation of test-particle pairs", ok,
           f"co-located r={r_same!r}; separated by {near[0]:g} m "
           f"(shortest wavelength {wavelength:.3g} m) r={r_near:.6f}; "
           f"independent |r|={abs(r_indep):.4f} <= {bound:g}", dt, 30)


def test_criterion_8_reproducibility(report, capsys, tmp_path):
    bg_csv = tmp_path / "bg.csv"
    runs = {
        "correlate": ["correlate", "--theta", "0,30,60", "--samples", "20000", "--shards", "4",
                      "--seed", "5"],
        "chsh": ["chsh", "--samples", "20000", "--shards", "3", "--seed", "6"],
        "chsh-analytic": ["chsh", "--analytic", "--model", "sign"],
        "scan": ["scan", "--grid", "8", "--refine", "10"],
        "background": ["background", "--modes", "16", "--seed", "7", "--format", "json"],
    }
    t0 = time.perf_counter()
    assert cli(["background", "--modes", "16", "--seed", "7", "--out", bg_csv], capsys)[0] == 0
    mismatched = []

    def results(argv, threads):
        code, out, _ = cli(argv + ["--threads", threads], capsys)
        assert code == 0, argv
        return json.dumps(json.loads(out)["results"], sort_keys=True)

    for name, argv in runs.items():
        if len({results(argv, t) for t in ("1", "1", "2", "5")}) != 1:
            mismatched.append(name)

    traj_bytes = []
    for k, threads in enumerate(("1", "4")):
        out = tmp_path / f"tr{k}.csv"
        cli(["oscillate", "--background", bg_csv, "--steps", "2000", "--record-every", "4",
             "--threads", threads, "--out", out], capsys)
        traj_bytes.append(out.read_bytes())
    if traj_bytes[0] != traj_bytes[1]:
        mismatched.append("oscillate")
    paths = [tmp_path / "tr0.csv", tmp_path / "tr1.csv"]
    if len({results(["phase-corr", *paths], t) for t in ("1", "3")}) != 1:
        mismatched.append("phase-corr")
    assert bio.read_trajectory(paths[0])[0].ell.size == 501
    dt = time.perf_counter() - t0
    report(8, "byte-identical results across repeats and --threads", not mismatched,
           f"{len(runs) + 2} commands checked; mismatches: {mismatched or 'none'}", dt, 10)
