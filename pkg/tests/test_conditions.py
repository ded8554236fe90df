import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rwrelab.conditions import (ParameterError, PMReport, aqee_exponent, c0_log10,
                                check_E_prime_toward_direction, check_kalikow_region,
                                check_theorem5_region, dirichlet_eta, dirichlet_kappa,
                                e_prime_holds, estimate_pm, eta_alpha_estimate,
                                hypothesis_report, kappa, wilson_interval)
from rwrelab.environment import Dirichlet, QuenchedEnvironment, Uniform
from rwrelab.lattice import BoxSpec
from rwrelab.walker import annealed_env_seed, exact_exit_distribution

weights = st.integers(2, 4).flatmap(
    lambda d: st.lists(st.floats(0.01, 10), min_size=2 * d, max_size=2 * d))


def test_kappa_examples():
    assert kappa((1, 1, 1, 1)) == 6
    assert kappa((1.5, 0.4, 0.2, 0.4)) == pytest.approx(3.3, abs=1e-15)
    with pytest.raises(ParameterError):
        kappa((1, 1, 1, 0))


def test_dirichlet_kappa_examples():
    assert dirichlet_kappa((0.3,) * 4) == pytest.approx(1.8)
    assert e_prime_holds((0.3,) * 4, 1) and not e_prime_holds((0.3,) * 4, 2)
    assert e_prime_holds((1.5, 0.4, 0.2, 0.4), 2)
    assert dirichlet_kappa((0.1,) * 4) == pytest.approx(0.6) and not e_prime_holds((0.1,) * 4, 1)
    assert kappa([Fraction(3, 10)] * 4) == Fraction(9, 5)


@given(w=weights, data=st.data())
def test_kappa_symmetries(w, data):
    d = len(w) // 2
    k = kappa(w)
    perm = data.draw(st.permutations(range(d)))
    flips = data.draw(st.lists(st.booleans(), min_size=d, max_size=d))
    v = [0.0] * (2 * d)
    for new, old in enumerate(perm):
        a, b = w[old], w[old + d]
        v[new], v[new + d] = (b, a) if flips[new] else (a, b)
    assert kappa(v) == k
    assert dirichlet_kappa(w) == k


def test_kappa_entry_points_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        b = tuple(rng.uniform(0.01, 5, 2 * d))
        assert kappa(b) == dirichlet_kappa(b)


def test_kalikow_examples():
    assert check_kalikow_region((2, 0.5, 0.5, 0.5))
    assert not check_kalikow_region((1, 1, 1, 1))
    assert check_kalikow_region((1.5, 0.4, 0.2, 0.4))


def test_theorem5_region():
    assert check_theorem5_region((1, 1, 1, 0.01), 0.05)
    assert not check_theorem5_region((1, 1, 1, 0.5), 0.05)
    # the axis whose opposite weight is small is reported
    v = check_theorem5_region((1, 1, 1, 0.01), 0.05)
    assert v.direction == 2 and "existential" in v.caveat
    assert not check_theorem5_region((1, 1, 1, 0.01), 0.05, direction=1)
    assert check_theorem5_region((1, 1, 0.01, 1), 0.05, direction=1)
    with pytest.raises(ParameterError):
        check_theorem5_region((1, 1, 1, 0.01), 1.5)


def test_E_prime_toward_direction():
    assert check_E_prime_toward_direction((1, 1, 0.5, 1), (1, 0))
    assert not check_E_prime_toward_direction((1, 0.5, 0.5, 1), (1, 0))
    with pytest.raises(ParameterError):
        check_E_prime_toward_direction((1, 1, 0, 1), (1, 0))


def test_E_prime_equal_weights_any_direction():
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        v = rng.normal(size=d)
        assert check_E_prime_toward_direction((0.7,) * (2 * d), v / np.linalg.norm(v))


def test_aqee_examples():
    assert aqee_exponent(0.6, 0.9, 0.1, 2) == pytest.approx(1.0)
    assert aqee_exponent(0.6, 0.85, 0.5, 2) == pytest.approx(0.8)
    with pytest.raises(ParameterError):
        aqee_exponent(0.6, 0.5, 0.1, 2)


def test_c0_examples():
    assert c0_log10(2) == pytest.approx(math.log10(2 / 3) + 1920 * math.log10(3))
    assert c0_log10(2) == pytest.approx(915.9, abs=0.05)
    assert c0_log10(3) == pytest.approx(4637.4, abs=0.05)


@given(d=st.integers(2, 6), a=st.floats(0, 5), b=st.floats(0, 5))
def test_c0_monotone_in_log_eta(d, a, b):
    lo, hi = sorted((a, b))
    assert c0_log10(d, lo) <= c0_log10(d, hi)


def test_eta_finite_case():
    est = eta_alpha_estimate(Dirichlet((1, 1, 1, 1)), 0.5, n_samples=200_000, seed=3)
    exact = dirichlet_eta((1, 1, 1, 1), 0.5, 0)
    # Beta(1, 3) moment: Gamma(1/2) Gamma(4) / (Gamma(1) Gamma(7/2)) = 3.2
    assert exact == pytest.approx(3.2)
    assert not est.divergence_flag
    assert abs(est.value - 3.2) < 0.05


def test_eta_divergent_case():
    est = eta_alpha_estimate(Dirichlet((1, 1, 1, 1)), 1.2, n_samples=200_000, seed=3)
    assert est.divergence_flag and math.isinf(est.closed_form[1])


def test_eta_zero():
    assert eta_alpha_estimate(Dirichlet((1, 2, 3, 4)), 0).value == 1.0


def test_wilson_edges():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0
    with pytest.raises(ParameterError):
        wilson_interval(0, 0)


def test_wilson_coverage_battery():
    rng = np.random.default_rng(0)
    n = 100
    p = rng.uniform(0, 1, 10**4)
    k = rng.binomial(n, p)
    hit = [lo <= q <= hi for q, (lo, hi) in zip(p, (wilson_interval(int(x), n) for x in k))]
    assert np.mean(hit) >= 0.95


def _report(lo, hi, L=4.0):
    return PMReport([1, 0], L, 10, 1, 1000, (lo + hi) / 2, lo, hi, L ** -1, "", 0)


@given(lo=st.floats(0, 1), w=st.floats(0, 1), M=st.floats(0, 10), dM=st.floats(0, 10))
def test_pm_verdict_monotone_in_M(lo, w, M, dM):
    hi = min(1.0, lo + w)
    rep = _report(lo, hi)
    if rep.verdict_at(M) == "pass":
        assert rep.verdict_at(M - dM) == "pass"


def test_pm_near_deterministic_drift_passes():
    law = Dirichlet((50, 0.5, 0.5, 0.5))
    rep = estimate_pm(law, (1, 0), 4, 1, L_tilde=4, n_walks=2000, seed=1, exact_envs=5)
    assert rep.p_hat < 0.01 and rep.verdict == "pass"
    assert rep.exact_annealed < 0.01


def test_pm_uniform_fails_and_matches_exact():
    rep = estimate_pm(Uniform(), (1, 0), 4, 25, n_walks=4000, seed=2, exact_envs=1)
    assert rep.verdict == "fail" and rep.p_hat >= 0.45
    assert rep.exact_annealed == pytest.approx(0.5, abs=1e-9)
    assert "desk-scale" in rep.note


def test_pm_exact_cross_check_uses_walk_environments():
    law = Dirichlet((1, 1, 1, 0.05))
    rep = estimate_pm(law, (3 / math.sqrt(10), 1 / math.sqrt(10)), 4, 1, L_tilde=6, n_walks=200,
                      seed=5, exact_envs=2)
    box = BoxSpec((3 / math.sqrt(10), 1 / math.sqrt(10)), 4, 6)
    env = QuenchedEnvironment(law, annealed_env_seed(5, 0))
    dist = exact_exit_distribution(env, box.bounding_sites(), (0, 0))
    first = sum(p for z, p in dist.items() if np.dot(z, box.l) < 4)
    assert 0 <= first <= 1 and 0 <= rep.exact_annealed <= 1


def test_pm_rejects_small_boxes():
    with pytest.raises(ParameterError):
        estimate_pm(Uniform(), (1, 0), 1, 1)
    with pytest.raises(ParameterError):
        estimate_pm(Uniform(), (1, 0), 4, 1, n_walks=10)


def test_hypothesis_report_examples():
    r = hypothesis_report(beta=(1.5, 0.4, 0.2, 0.4))
    assert r.kappa_value == pytest.approx(3.3)
    assert (r.lln, r.annealed_clt, r.quenched_clt, r.kalikow) == (True, True, False, True)
    assert r.E_prime_levels == {"1": True, "2": True, "352": False}
    r = hypothesis_report(beta=(0.3,) * 4)
    assert r.kappa_value == pytest.approx(1.8)
    assert (r.lln, r.annealed_clt, r.kalikow) == (True, False, False)
    r = hypothesis_report(beta=(0.1,) * 4)
    assert r.kappa_value == pytest.approx(0.6) and not r.lln


def test_hypothesis_report_with_eta():
    law = Dirichlet((1, 1, 1, 0.05))
    r = hypothesis_report(law=law, epsilon=0.1, eta_alpha=0.02, v_hat=(0, 1), eta_samples=20000)
    assert r.theorem5_region["in_region"]
    assert set(r.eta_alpha) == {"all_directions", "half_space"}
    assert r.to_dict()["c0_log10"] == pytest.approx(915.9, abs=0.05)
