import numpy as np
import pytest

from onebitphase import (
    Identity,
    TrialGrid,
    am_error_decay,
    phase_transition,
    read_csv,
    robustness_sweep,
    write_csv,
)
from onebitphase.bench import CSV_HEADER, ResultRow, ResultTable


def small_grid(**overrides):
    kw = dict(n=32, r_values=[4, 16], model=Identity(), trials=4, tau=0.07,
              seed=11, init_kinds=("onebit", "subexp"))
    kw.update(overrides)
    return TrialGrid(**kw)


def test_phase_transition_is_deterministic_and_sorted():
    t1 = phase_transition(small_grid())
    t2 = phase_transition(small_grid())
    assert [(r.r, r.init, r.success_prob, r.median_err, r.mean_iters) for r in t1.rows] == \
           [(r.r, r.init, r.success_prob, r.median_err, r.mean_iters) for r in t2.rows]
    coords = [(row.r, row.init) for row in t1.rows]
    assert coords == sorted(coords)
    assert all(0.0 <= row.success_prob <= 1.0 for row in t1.rows)


def test_phase_transition_thread_count_does_not_change_results():
    t1 = phase_transition(small_grid(), threads=1)
    t4 = phase_transition(small_grid(), threads=4)
    for a, b in zip(t1.rows, t4.rows):
        assert (a.r, a.init, a.success_prob, a.median_err, a.mean_iters) == \
               (b.r, b.init, b.success_prob, b.median_err, b.mean_iters)


def test_success_improves_with_r():
    # no cell with larger r may fall more than 0.15 below a smaller-r cell
    grid = TrialGrid(n=64, r_values=[8, 32, 64], model=Identity(), trials=10,
                     tau=0.07, seed=12, init_kinds=("onebit",))
    table = phase_transition(grid)
    probs = [table.cell(r, "onebit").success_prob for r in (8, 32, 64)]
    for i, p in enumerate(probs):
        assert all(later >= p - 0.15 for later in probs[i + 1:])
    assert probs[-1] == 1.0


def test_grid_validation():
    with pytest.raises(ValueError):
        small_grid(trials=0)
    with pytest.raises(ValueError):
        small_grid(tau=1.0)
    with pytest.raises(ValueError):
        small_grid(init_kinds=("random",))  # random init needs am_refine
    TrialGrid(n=16, r_values=[2], model=Identity(), trials=1, tau=0.07, seed=1,
              init_kinds=("random",), am_refine=True)


def test_am_refined_transition_beats_spectral_alone():
    grid = small_grid(n=64, r_values=[8], trials=6, am_refine=True, t0=30,
                      init_kinds=("onebit", "random"), tau=1e-6)
    table = phase_transition(grid)
    onebit = table.cell(8, "onebit")
    rand = table.cell(8, "random")
    assert onebit.success_prob >= rand.success_prob
    assert onebit.success_prob == 1.0


def test_csv_round_trip_is_exact():
    table = ResultTable([
        ResultRow(4, "onebit", 0.0, 0.25, 0.123457, 100.5, 12.3),
        ResultRow(16, "subexp", 1.0, 1.0, 1e-12, 40.0, 0.0),
    ])
    path1 = "/tmp/onebitphase_test_a.csv"
    path2 = "/tmp/onebitphase_test_b.csv"
    write_csv(table, path1)
    parsed = read_csv(path1)
    write_csv(parsed, path2)
    b1 = open(path1, "rb").read()
    b2 = open(path2, "rb").read()
    assert b1 == b2
    assert b1.startswith((CSV_HEADER + "\n").encode())
    assert b"\r" not in b1  # LF endings only
    # timing suppressed by default, preserved on request
    assert parsed.rows[0].wall_ms == 0.0
    write_csv(table, path1, timing=True)
    assert read_csv(path1).rows[0].wall_ms == 12.3


def test_read_csv_rejects_malformed_input():
    path = "/tmp/onebitphase_test_bad.csv"
    with open(path, "w") as fh:
        fh.write("nope\n1,2,3\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_robustness_sweep_couples_parameter_values():
    # sigma = 0 reproduces the noiseless run cell for cell
    table = robustness_sweep("sigma", [0.0, 4.0], n=32, r_values=[4, 16],
                             trials=4, seed=11)
    noiseless = phase_transition(small_grid(init_kinds=("onebit",)))
    for r in (4, 16):
        assert table.cell(r, "onebit", 0.0).median_err == \
               noiseless.cell(r, "onebit").median_err
    coords = [(row.param, row.r) for row in table.rows]
    assert coords == sorted(coords)


def test_robustness_more_pairs_help_at_every_noise_level():
    table = robustness_sweep("sigma", [0.0, 1.0, 4.0], n=64, r_values=[10, 20],
                             trials=8, seed=13)
    for sigma in (0.0, 1.0, 4.0):
        assert table.cell(20, "onebit", sigma).median_err <= \
               table.cell(10, "onebit", sigma).median_err


def test_robustness_sweep_validates_parameter():
    with pytest.raises(ValueError):
        robustness_sweep("nonsense", [1.0], n=16, r_values=[2], trials=1, seed=1)


def test_am_error_decay_traces():
    traces = am_error_decay(64, 6, Identity(), ["truth", "onebit", "random"],
                            t0=25, trials=4, seed=14)
    assert set(traces) == {"truth", "onebit", "random"}
    for kind, arr in traces.items():
        assert arr.shape == (4, 26)
    # exact initialization stays at the fixed point
    assert np.max(traces["truth"]) <= 1e-12
    # spectral init converges fast; random init lags at the same budget
    assert np.median(traces["onebit"][:, -1]) <= 1e-6
    one_final = traces["onebit"][:, -1]
    rand_final = traces["random"][:, -1]
    assert np.sum(one_final <= rand_final) >= 3
    # determinism across thread counts
    again = am_error_decay(64, 6, Identity(), ["onebit"], t0=25, trials=4,
                           seed=14, threads=3)
    assert np.array_equal(traces["onebit"], again["onebit"])


def test_am_error_decay_validates_init():
    with pytest.raises(ValueError):
        am_error_decay(16, 2, Identity(), ["bogus"], t0=2, trials=1, seed=1)


def test_median_error_non_increasing_in_r():
    # more mask pairs never hurt: median over 20 trials along an r grid
    grid = TrialGrid(n=128, r_values=[5, 10, 20, 40, 80], model=Identity(),
                     trials=20, tau=0.07, seed=15, init_kinds=("onebit",))
    table = phase_transition(grid)
    medians = [table.cell(r, "onebit").median_err for r in grid.r_values]
    assert all(a >= b for a, b in zip(medians, medians[1:]))


def test_spectral_init_outruns_random_init_at_fixed_budget():
    # error decay at the refinement's stated operating point
    traces = am_error_decay(256, 8, Identity(), ["onebit", "random"],
                            t0=50, trials=20, seed=16)
    onebit_final = traces["onebit"][:, -1]
    random_final = traces["random"][:, -1]
    assert np.sum(onebit_final < 1e-8) >= 18
    assert np.sum(random_final > onebit_final) >= 15
