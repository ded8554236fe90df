import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwrelab.environment import (CRExample, Dirichlet, LawError, QuenchedEnvironment, RatioLaw,
                                 SiteDistribution, Uniform, drift, iid_sites, law_from_dict,
                                 law_to_dict, sample_cr_example, sample_dirichlet,
                                 sample_ratio_law)


def test_dirichlet_reproducible():
    a = sample_dirichlet([1, 1, 1, 1], np.random.default_rng(3))
    b = sample_dirichlet([1, 1, 1, 1], np.random.default_rng(3))
    assert a == b


def test_dirichlet_means():
    w = sample_dirichlet([1, 2, 3, 4], np.random.default_rng(0), size=10**6)
    assert np.abs(w.mean(axis=0) - [0.1, 0.2, 0.3, 0.4]).max() < 0.005


def test_dirichlet_concentration():
    w = sample_dirichlet([100] * 4, np.random.default_rng(1), size=20000)
    assert np.abs(w.mean(axis=0) - 0.25).max() < 0.005
    # closed form: sqrt(0.25 * 0.75 / 401) = 0.0216
    assert w.std(axis=0).max() < 0.05


def test_dirichlet_small_shapes_stay_elliptic():
    w = sample_dirichlet([0.05, 0.1, 0.05, 0.1], np.random.default_rng(2), size=10**5)
    assert np.all(w > 0) and np.abs(w.sum(axis=1) - 1).max() < 1e-12
    assert np.abs(w.mean(axis=0) - np.array([1, 2, 1, 2]) / 6).max() < 0.01


@pytest.mark.parametrize("beta", [[1, 1, 0, 1], [1, -1, 1, 1]])
def test_dirichlet_rejects_nonpositive(beta):
    with pytest.raises(LawError):
        sample_dirichlet(beta, np.random.default_rng(0))
    with pytest.raises(LawError):
        Dirichlet(tuple(beta))


def test_dirichlet_restriction_property():
    w = iid_sites(Dirichlet((1, 1, 1, 1)), 10**5, 11)
    s = w[:, 0] + w[:, 2]
    r = w[:, 0] / s
    assert abs(r.mean() - 0.5) < 0.01
    assert abs(np.corrcoef(r, s)[0, 1]) < 0.02


@given(seed=st.integers(0, 2**32 - 1))
def test_cr_sample_structure(seed):
    p = sample_cr_example(np.random.default_rng(seed)).probs
    assert p.sum() == pytest.approx(1, abs=1e-15)
    assert p[0] == 2 * p[2]
    assert np.all(p > 0)


def test_cr_default_phi_moments():
    # E phi^-0.4 = 4^0.4 / 0.2 is finite; E phi^-0.5 diverges logarithmically in the sample size
    rng = np.random.default_rng(5)
    draws = np.array([sample_cr_example(rng).probs[2] for _ in range(10**4)])
    w = iid_sites(CRExample(), 10**6, 6)
    phi = w[:, 2]
    assert np.all(w[:, 0] == 2 * w[:, 2])
    assert abs(np.mean(phi ** -0.4) - 4 ** 0.4 / 0.2) < 0.05 * 4 ** 0.4 / 0.2
    growth = [np.mean(phi[:n] ** -0.5) for n in (10**4, 10**5, 10**6)]
    assert growth[0] < growth[1] < growth[2]
    # slow mode of the same sampler agrees with the kernel on the phi mean (1/12)
    assert abs(draws.mean() - 1 / 12) < 0.005


def test_cr_rejects_bad_phi():
    with pytest.raises(LawError):
        sample_cr_example(np.random.default_rng(0), phi_law=lambda rng: 0.3)


def test_ratio_law_cr_split_is_cr_family():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = sample_ratio_law(2, rng, split="cr").probs
        phi = p[2]
        assert p[0] == 2 * phi and phi in (p[1], p[3])
        assert p[1] + p[3] == pytest.approx(1 - 3 * phi)


def test_ratio_law_forced_split():
    rng = np.random.default_rng(8)
    for _ in range(200):
        p = sample_ratio_law(3, rng).probs
        m = p[0] + p[2]
        assert 0.1 <= m <= 0.9
        assert p[0] == pytest.approx(3 * m / 4) and p[2] == pytest.approx(m / 4)
        assert p[0] == 3 * p[2]
        assert drift(p)[0] > 0


def test_ratio_law_rejects_small_r():
    with pytest.raises(LawError):
        sample_ratio_law(1.0, np.random.default_rng(0))
    with pytest.raises(LawError):
        RatioLaw(0.5)


def test_ratio_kernel_exact_ratio():
    w = iid_sites(RatioLaw(2.5, d=3), 10**4, 1)
    assert np.all(w[:, 0] == 2.5 * w[:, 3])
    assert np.all(w > 0)


def test_drift_examples():
    assert np.array_equal(drift(SiteDistribution(np.full(4, 0.25))), [0, 0])
    p = SiteDistribution(np.array([0.2, 0.1, 0.1, 0.6]))  # phi = 0.1, X = 1
    assert np.allclose(drift(p), [0.1, -0.5], atol=1e-15)


def test_site_distribution_validation():
    with pytest.raises(LawError):
        SiteDistribution(np.array([0.5, 0.5, 0.0, 0.0]))
    with pytest.raises(LawError):
        SiteDistribution(np.array([0.3, 0.3, 0.3, 0.3]))


@pytest.mark.parametrize("law", [Dirichlet((0.3, 0.5, 0.7, 0.1)), CRExample(), RatioLaw(2.0),
                                 RatioLaw(1.5, split="cr"), Dirichlet((1,) * 6), Uniform(3)])
def test_every_sample_is_a_distribution(law):
    w = iid_sites(law, 20000, 123)
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    assert np.all((w > 0) & (w < 1))


def test_quenched_site_determinism():
    env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 42)
    a = env.site((3, -1))
    b = env.site((3, -1))
    assert a is b
    fresh = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 42).site((3, -1))
    assert np.array_equal(a.probs, fresh.probs)
    other = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 43).site((0, 0))
    assert not np.array_equal(env.site((0, 0)).probs, other.probs)


def test_quenched_site_means():
    env = QuenchedEnvironment(Dirichlet((1, 1, 1, 1)), 9)
    xs = np.stack(np.meshgrid(np.arange(100), np.arange(100), indexing="ij"), -1).reshape(-1, 2)
    p = np.array([env.site(x).probs for x in xs])
    assert np.abs(p.mean(axis=0) - 0.25).max() < 0.02
    assert np.array_equal(p, env.probs_at(xs))


def test_quenched_order_independence():
    rng = np.random.default_rng(0)
    xs = [tuple(x) for x in rng.integers(-20, 20, size=(50, 2))]
    ref = {x: QuenchedEnvironment(CRExample(), 5).site(x).probs for x in xs}
    for _ in range(100):
        env = QuenchedEnvironment(CRExample(), 5)
        for k in rng.permutation(len(xs)):
            assert np.array_equal(env.site(xs[k]).probs, ref[xs[k]])


def test_quenched_concurrent_queries_agree():
    from concurrent.futures import ThreadPoolExecutor

    env = QuenchedEnvironment(Dirichlet((0.5, 1, 2, 1)), 77)
    xs = [(i % 13, i // 13) for i in range(400)]
    with ThreadPoolExecutor(8) as pool:
        got = list(pool.map(env.site, xs * 4))
    for k, x in enumerate(xs * 4):
        assert got[k] is env.site(x)


def test_law_dict_round_trip():
    for law in (Dirichlet((1, 2, 3, 4)), CRExample(), Uniform(3), RatioLaw(2.0, split="cr")):
        assert law_from_dict(law_to_dict(law)) == law
    with pytest.raises(LawError):
        law_from_dict({"variant": "mystery"})
    with pytest.raises(LawError):
        law_from_dict({"variant": "dirichlet", "beta": [1, 1, 1, 1], "extra": 1})
