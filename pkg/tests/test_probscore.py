import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actionre.automata import compile_pattern
from actionre.eval import auc
from actionre.pattern import Vocabulary, parse
from actionre.probscore import (
    EmissionParams,
    Pa,
    ProbabilisticScorer,
    build_pa,
    emission_log_probs,
    emission_prob,
    induced_matrix,
    match_prob,
    match_prob_many,
    naive_induced_matrix,
    naive_match_prob,
    support_mass,
    support_masks,
)
from oracles import all_symbols, random_pattern

AB = Vocabulary(["a", "b"])
A1 = Vocabulary(["a"])


def random_case(rng: random.Random, nrng: np.random.Generator):
    m = rng.randint(1, 3)
    d = compile_pattern(random_pattern(rng, m, 4))
    alpha = float(10 ** nrng.uniform(-6, 0))
    params = EmissionParams(rng.choice([0.5, 1.0, 2.0]))
    v = nrng.random((rng.randint(1, 6), m))
    return build_pa(d, alpha), v, params


class TestBuildPa:
    def test_four_state_entries(self):
        d = compile_pattern(parse("{a} {b}", AB))
        assert d.state_count == 4
        pa = build_pa(d, 1.0)
        t = pa.t_support[0]  # symbol {a}
        assert t[0, 1] == pytest.approx(0.4)
        assert t[0, 0] == t[0, 2] == t[0, 3] == pytest.approx(0.2)
        np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-12)

    def test_rho(self):
        d = compile_pattern(parse("{a}*", A1))
        assert d.state_count == 2 and d.start == 0
        np.testing.assert_allclose(build_pa(d, 0.5).rho, [0.75, 0.25])

    def test_small_alpha_is_one_hot(self):
        d = compile_pattern(parse("{a}+ {b}", AB))
        pa = build_pa(d, 1e-12)
        for k in range(len(d.support)):
            expected = np.zeros((d.state_count, d.state_count))
            expected[np.arange(d.state_count), d.table[:, k]] = 1.0
            np.testing.assert_allclose(pa.t_support[k], expected, atol=1e-9)

    def test_invariants(self):
        rng, nrng = random.Random(1), np.random.default_rng(1)
        for _ in range(30):
            pa, _, _ = random_case(rng, nrng)
            for t in list(pa.t_support) + [pa.t_bar]:
                np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-9)
                assert (t > 0).all()
            assert abs(pa.rho.sum() - 1) < 1e-9
            assert pa.finals.sum() >= 1

    def test_reject_not_final(self):
        d = compile_pattern(parse("{a}", A1))
        assert build_pa(d, 0.1).finals[d.reject] == 0

    def test_needs_total_machine(self):
        d = compile_pattern(parse("{a}", A1), completed=False)
        with pytest.raises(ValueError):
            build_pa(d, 0.1)


class TestEmission:
    def test_gamma_one_is_bernoulli(self):
        p = [0.9, 0.1]
        assert emission_prob(p, {0}) == pytest.approx(0.81)
        total = sum(emission_prob(p, w) for w in all_symbols(2))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_gamma_two_half(self):
        assert emission_prob([0.5], {0}, EmissionParams(2.0)) == pytest.approx(0.5)

    def test_clamping(self):
        assert emission_prob([1.0], {0}) == pytest.approx(1 - 1e-6)
        assert np.isfinite(emission_log_probs(np.array([[0.0, 1.0]]), support_masks([{0}], 2),
                                              EmissionParams(3.0))).all()

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(1, 10).flatmap(
            lambda m: st.lists(st.floats(0, 1), min_size=m, max_size=m)
        ),
        st.floats(0.05, 5.0),
    )
    def test_normaliser(self, probs, gamma):
        m = len(probs)
        masks = np.array(list(itertools.product([False, True], repeat=m)))
        total = np.exp(emission_log_probs(np.array(probs), masks, EmissionParams(gamma))).sum()
        assert abs(total - 1.0) <= 1e-9

    def test_bad_params(self):
        with pytest.raises(ValueError):
            EmissionParams(0.0)
        with pytest.raises(ValueError):
            EmissionParams(1.0, 0.5)


class TestSupportMass:
    def test_full_support(self):
        assert support_mass([0.3, 0.6], all_symbols(2)) == pytest.approx(1.0)

    def test_empty_support(self):
        assert support_mass([0.3, 0.6], []) == 0.0

    def test_single(self):
        assert support_mass([0.9, 0.1], [frozenset({0})]) == pytest.approx(0.81)


class TestInducedMatrix:
    def test_all_mass_on_one_symbol(self):
        d = compile_pattern(parse("{a} {b}", AB))
        pa = build_pa(d, 0.1)
        # p = (1, 0) clamped; γ large pushes essentially all mass onto {a}
        got = induced_matrix(pa, [1.0, 0.0], EmissionParams(50.0))
        np.testing.assert_allclose(got, pa.t_support[0], atol=1e-12)

    def test_zero_support_mass(self):
        d = compile_pattern(parse("{a} {b}", AB))
        pa = build_pa(d, 0.1)
        got = induced_matrix(pa, [1.0, 1.0], EmissionParams(50.0))  # all mass on {a,b}
        np.testing.assert_allclose(got, pa.t_bar, atol=1e-12)

    def test_single_action(self):
        d = compile_pattern(parse("{a}+", A1))
        pa = build_pa(d, 0.2)
        np.testing.assert_allclose(
            induced_matrix(pa, [0.3]), naive_induced_matrix(pa, [0.3]), atol=1e-12
        )

    def test_matches_enumeration(self):
        rng, nrng = random.Random(2), np.random.default_rng(2)
        for _ in range(100):
            pa, v, params = random_case(rng, nrng)
            for f in v:
                fast = induced_matrix(pa, f, params)
                np.testing.assert_allclose(fast, naive_induced_matrix(pa, f, params), atol=1e-12, rtol=0)
                np.testing.assert_allclose(fast.sum(axis=1), 1.0, atol=1e-9)

    def test_enumeration_guard(self):
        d = compile_pattern(parse("{a}", A1))
        pa = build_pa(d, 0.1)
        with pytest.raises(ValueError):
            naive_induced_matrix(pa, np.full(17, 0.5))


class TestMatchProb:
    def test_confident_single_frame(self):
        d = compile_pattern(parse("{a}", A1))
        pa = build_pa(d, 1e-9)
        assert match_prob(pa, [[1 - 1e-6]]) >= 0.999

    def test_uniform_pa(self):
        half = np.full((2, 2), 0.5)
        pa = Pa((frozenset({0}),), [0.5, 0.5], [half], half, [1.0, 0.0])
        assert match_prob(pa, [[0.3]]) == pytest.approx(0.5)
        assert match_prob(pa, [[0.3]], root="elementwise") == pytest.approx(0.5)

    @pytest.mark.parametrize("root", ["total", "elementwise"])
    def test_matches_path_enumeration(self, root):
        rng, nrng = random.Random(3), np.random.default_rng(3)
        for _ in range(60):
            pa, v, params = random_case(rng, nrng)
            assert match_prob(pa, v, params, root) == pytest.approx(
                naive_match_prob(pa, v, params, root), abs=1e-9, rel=0
            )

    def test_range_total(self):
        rng, nrng = random.Random(5), np.random.default_rng(5)
        for _ in range(100):
            pa, v, params = random_case(rng, nrng)
            assert 0.0 <= match_prob(pa, v, params) <= 1.0 + 1e-12

    def test_elementwise_exceeds_one_with_two_finals(self):
        # two final states each holding half the mass: Σ u^(1/n) = 2·0.5^(1/2)
        half = np.full((2, 2), 0.5)
        pa = Pa((), [0.5, 0.5], np.zeros((0, 2, 2)), half, [1.0, 1.0])
        v = [[0.5], [0.5]]
        assert match_prob(pa, v, root="elementwise") == pytest.approx(2 * 0.5 ** 0.5)
        assert match_prob(pa, v, root="total") == pytest.approx(1.0)

    def test_no_underflow_on_long_videos(self):
        d = compile_pattern(parse("({a}|{b})+", AB))
        pa = build_pa(d, 1e-3)
        v = np.random.default_rng(0).random((100_000, 2))
        s = match_prob(pa, v)
        assert 0.0 < s <= 1.0

    def test_empty_video_rejected(self):
        pa = build_pa(compile_pattern(parse("{a}", A1)), 0.1)
        with pytest.raises(ValueError):
            match_prob(pa, np.zeros((0, 1)))

    def test_naive_guard(self):
        pa = build_pa(compile_pattern(parse("{a}", A1)), 0.1)
        with pytest.raises(ValueError):
            naive_match_prob(pa, np.full((7, 1), 0.5))

    def test_batch_matches_single(self):
        d = compile_pattern(parse("{a}+ ({b}|{a,b})", AB))
        pa = build_pa(d, 1e-2)
        nrng = np.random.default_rng(8)
        vids = [nrng.random((n, 2)) for n in (3, 5, 3, 8, 5)]
        np.testing.assert_allclose(
            match_prob_many(pa, vids), [match_prob(pa, v) for v in vids], rtol=1e-12
        )

    def test_permutation_equivariance(self):
        vocab = Vocabulary(["a", "b", "c"])
        perm = [2, 0, 1]  # new index of old action i
        renamed = Vocabulary([vocab.name(perm.index(j)) for j in range(3)])
        text = "{a,b}+ ({c}|{a})"
        d1 = compile_pattern(parse(text, vocab))
        d2 = compile_pattern(parse(text, renamed))
        nrng = np.random.default_rng(6)
        for _ in range(20):
            v = nrng.random((5, 3))
            v2 = np.empty_like(v)
            v2[:, perm] = v
            s1 = match_prob(build_pa(d1, 0.01), v, EmissionParams(0.7))
            s2 = match_prob(build_pa(d2, 0.01), v2, EmissionParams(0.7))
            assert s1 == pytest.approx(s2, rel=1e-12)

    def test_low_noise_ranking(self):
        d = compile_pattern(parse("{a}+ {b} ({a}|{a,b})*", AB))
        scorer = ProbabilisticScorer(d, alpha=1e-6, gamma=1.0)
        rng = np.random.default_rng(9)
        letters = all_symbols(2)
        scores, labels = [], []
        for _ in range(300):
            syms = [letters[i] for i in rng.integers(0, 4, size=6)]
            v = np.full((6, 2), 0.02)
            for i, s in enumerate(syms):
                v[i, list(s)] = 0.98
            scores.append(scorer(v))
            labels.append(d.accepts(syms))
        scores, labels = np.array(scores), np.array(labels)
        assert labels.any() and not labels.all()
        assert scores[labels].min() > scores[~labels].max()
        assert auc(scores, labels) == 1.0
