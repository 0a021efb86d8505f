from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
import scipy.linalg as la

from conftest import const_land, varying_land
from metaeq.colonization import ColonizationFunction
from metaeq.errors import ModelInvalidError, PreconditionError
from metaeq.io import read_csv, write_events
from metaeq.patches import PatchSet, sample_patches
from metaeq.stochastic import (CTMCTrajectory, ctmc_simulate, discrete_chain_step, occupancy_statistics,
                               window_occupancy)


def isolated_pair(e=0.3):
    land = const_land(e=e, r=0.1)
    return PatchSet(land, np.array([[0.1, 0.1], [0.9, 0.9]]))


def qsd_occupancy(ps, f):
    """Per-patch occupancy under the quasi-stationary law of the dense generator."""
    n = ps.n
    K = ps.K.toarray()
    states = [np.array(s) for s in itertools.product((0, 1), repeat=n)]
    index = {tuple(s): k for k, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for k, s in enumerate(states):
        for i in range(n):
            t = s.copy()
            t[i] = 1 - s[i]
            rate = ps.e[i] if s[i] else float(f(K[i] @ s))
            Q[k, index[tuple(t)]] += rate
        Q[k, k] = -Q[k].sum()
    live = [k for k, s in enumerate(states) if s.any()]
    sub = Q[np.ix_(live, live)]
    w, vl = la.eig(sub, left=True, right=False)
    top = np.argmax(w.real)
    nu = np.abs(vl[:, top].real)
    nu /= nu.sum()
    occ = np.array([states[k] for k in live], dtype=float)
    return nu @ occ


class TestDiscreteChain:
    def test_extinction_absorbing(self, f_sat):
        ps = sample_patches(varying_land(), 40, seed=1)
        rng = np.random.default_rng(0)
        assert np.all(discrete_chain_step(ps, f_sat, np.zeros(40, dtype=int), rng) == 0)

    def test_survival_frequency(self, f_sat):
        ps = isolated_pair(e=0.3)
        rng = np.random.default_rng(1)
        trials = 100_000
        x = np.array([1, 0])
        hits = sum(int(discrete_chain_step(ps, f_sat, x, rng)[0]) for _ in range(trials))
        se = math.sqrt(0.7 * 0.3 / trials)
        assert abs(hits / trials - 0.7) < 3 * se

    def test_two_patch_enumeration(self, f_sat):
        land = const_land(e=0.25, a=0.01, r=0.2)
        ps = PatchSet(land, np.array([[0.5, 0.5], [0.6, 0.5]]))
        x = np.array([1, 0])
        col = float(f_sat(ps.K.toarray()[1, 0]))
        probs = {}
        for a, b in itertools.product((0, 1), repeat=2):
            probs[(a, b)] = (0.75 if a else 0.25) * (col if b else 1 - col)
        rng = np.random.default_rng(2)
        trials = 50_000
        counts = dict.fromkeys(probs, 0)
        for _ in range(trials):
            y = discrete_chain_step(ps, f_sat, x, rng)
            counts[(int(y[0]), int(y[1]))] += 1
        for k, p in probs.items():
            se = math.sqrt(p * (1 - p) / trials)
            assert abs(counts[k] / trials - p) < 4 * se + 1e-12

    def test_model_invalid(self, f_lin):
        land = const_land(e=0.2, r=0.2)
        ps = PatchSet(land, np.array([[0.5, 0.5], [0.55, 0.5], [0.9, 0.9]]))
        with pytest.raises(ModelInvalidError) as ei:
            discrete_chain_step(ps, f_lin, np.array([0, 1, 0]), np.random.default_rng(0))
        assert ei.value.patch == 0

    def test_state_validation(self, f_sat):
        ps = isolated_pair()
        with pytest.raises(PreconditionError):
            discrete_chain_step(ps, f_sat, np.array([0.5, 0]), np.random.default_rng(0))


class TestCTMC:
    def test_empty_state_has_no_events(self, f_sat):
        ps = sample_patches(varying_land(), 30, seed=1)
        tr = ctmc_simulate(ps, f_sat, np.zeros(30, dtype=int), 100.0, np.random.default_rng(0))
        assert tr.times.size == 0 and tr.extinct

    def test_first_event_exponential(self, f_sat):
        land = const_land(e=0.4, r=0.2)
        ps = PatchSet(land, np.array([[0.5, 0.5], [0.55, 0.5], [0.5, 0.56]]))
        rng = np.random.default_rng(3)
        runs = 100_000
        first = np.empty(runs)
        for k in range(runs):
            first[k] = _first_event(ps, f_sat, rng)
        rate = 3 * 0.4
        assert abs(first.mean() - 1 / rate) < 3 * (1 / rate) / math.sqrt(runs)

    def test_three_patch_quasi_stationary(self):
        f = ColonizationFunction("saturating", 1.0)
        # mean extinction time from the generator is about 2800, well past the horizon
        land = const_land(e=0.02, a=0.05, r=0.2, profile="linear")
        ps = PatchSet(land, np.array([[0.5, 0.5], [0.56, 0.5], [0.5, 0.65]]))
        oracle = qsd_occupancy(ps, f)
        means = []
        for rep in range(12):
            tr = ctmc_simulate(ps, f, np.ones(3, dtype=int), 1000.0, np.random.default_rng(100 + rep))
            if tr.extinct:
                continue
            means.append(occupancy_statistics(tr, burn_in=50.0).mean)
        assert len(means) >= 8
        np.testing.assert_allclose(np.mean(means, axis=0), oracle, atol=0.05)

    def test_event_rate_ceiling(self, f_sat):
        ps = sample_patches(varying_land(r=0.15), 300, seed=4)
        t_end = 20.0
        tr = ctmc_simulate(ps, f_sat, np.ones(300, dtype=int), t_end, np.random.default_rng(1))
        rho_local = float(np.max(ps.K.sum(axis=1)))
        ceiling = ps.n * (ps.landscape.e.upper + float(f_sat(rho_local)))
        assert tr.times.size <= ceiling * t_end
        assert np.all(np.diff(tr.times) >= 0) and tr.times[-1] <= t_end

    def test_extinction_absorbing(self, f_sat):
        land = const_land(e=2.0, a=0.001, r=0.1)
        ps = sample_patches(land, 20, seed=2)
        tr = ctmc_simulate(ps, f_sat, np.ones(20, dtype=int), 50.0, np.random.default_rng(2))
        assert tr.extinct and tr.extinction_time == tr.times[-1]
        assert np.all(tr.state_at(tr.extinction_time) == 0)
        assert np.all(tr.state_at(49.0) == 0)

    def test_state_replay_and_reproducibility(self, f_sat):
        ps = sample_patches(varying_land(r=0.2), 60, seed=5)
        x0 = np.ones(60, dtype=int)
        a = ctmc_simulate(ps, f_sat, x0, 30.0, np.random.default_rng(7))
        b = ctmc_simulate(ps, f_sat, x0, 30.0, np.random.default_rng(7))
        assert np.array_equal(a.times, b.times) and np.array_equal(a.patches, b.patches)
        # every event flips its patch
        x = x0.copy()
        for i, s in zip(a.patches, a.states):
            assert x[i] != s
            x[i] = s
        assert np.array_equal(x, a.state_at(30.0))

    def test_bad_horizon(self, f_sat):
        with pytest.raises(PreconditionError):
            ctmc_simulate(isolated_pair(), f_sat, np.array([1, 1]), 0.0, np.random.default_rng(0))

    def test_event_csv(self, f_sat, tmp_path):
        ps = sample_patches(varying_land(r=0.2), 10, seed=5)
        tr = ctmc_simulate(ps, f_sat, np.ones(10, dtype=int), 5.0, np.random.default_rng(7))
        write_events(tmp_path / "ev.csv", tr)
        rows = read_csv(tmp_path / "ev.csv")
        assert len(rows) == tr.times.size
        if rows:
            assert list(rows[0]) == ["time", "patch_id", "new_state"]
            assert float(rows[0]["time"]) == tr.times[0]


def _first_event(ps, f, rng):
    # P(no event before t = 20) = exp(-24); the horizon only has to cover the first event
    tr = ctmc_simulate(ps, f, np.ones(ps.n, dtype=int), 20.0, rng, block=8)
    return float(tr.times[0])


class TestOccupancy:
    def test_constant_occupied(self):
        tr = CTMCTrajectory(np.ones(3, dtype=np.int8), np.zeros(0), np.zeros(0, dtype=np.int64),
                            np.zeros(0, dtype=np.int8), 10.0, False, None)
        st = occupancy_statistics(tr, 2.0)
        assert np.all(st.mean == 1.0) and not st.extinct

    def test_alternating_hand(self):
        tr = CTMCTrajectory(np.array([1, 0], dtype=np.int8), np.array([1.0, 3.0]), np.array([0, 1]),
                            np.array([0, 1], dtype=np.int8), 4.0, False, None)
        np.testing.assert_allclose(occupancy_statistics(tr).mean, [0.25, 0.25])
        np.testing.assert_allclose(occupancy_statistics(tr, 2.0).mean, [0.0, 0.5])
        np.testing.assert_allclose(window_occupancy(tr, 0.5, 1.5), [0.5, 0.0])

    def test_extinction_flagged(self):
        tr = CTMCTrajectory(np.array([1, 1], dtype=np.int8), np.array([1.0, 2.0]), np.array([0, 1]),
                            np.array([0, 0], dtype=np.int8), 10.0, True, 2.0)
        st = occupancy_statistics(tr, 0.0)
        np.testing.assert_allclose(st.mean, [0.5, 1.0])
        assert st.extinct and not st.extinct_before_burn_in
        late = occupancy_statistics(tr, 5.0)
        assert late.extinct_before_burn_in and late.window == (0.0, 2.0)
        np.testing.assert_allclose(late.mean, [0.5, 1.0])

    def test_burn_in_too_long(self):
        tr = CTMCTrajectory(np.ones(1, dtype=np.int8), np.zeros(0), np.zeros(0, dtype=np.int64),
                            np.zeros(0, dtype=np.int8), 1.0, False, None)
        with pytest.raises(PreconditionError):
            occupancy_statistics(tr, 1.0)
