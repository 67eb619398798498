import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wiresecret._validation import ValidationError
from wiresecret.channels import (
    AlphabetOverflowError, DegradednessError, DmcBroadcast, GaussianMimoBroadcast,
    GaussianSisoBroadcast, channel_from_dict, check_degraded_chain, check_degraded_dmc,
    conditional_mi_dmc, gaussian_group_mi, mutual_information_dmc, psd_order_check,
)
from wiresecret.info import binary_entropy, entropy

from oracles import group_mi_logdet, mi_pooled, mi_u_pooled


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def erasure(e):
    return np.array([[1 - e, e, 0.0], [0.0, e, 1 - e]])


def random_stochastic(rng, rows, cols):
    m = rng.random((rows, cols)) ** 2
    return m / m.sum(axis=1, keepdims=True)


class TestDmcModel:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            DmcBroadcast((np.array([[0.5, 0.4], [0.5, 0.5]]),))

    def test_negative_entries(self):
        with pytest.raises(ValidationError):
            DmcBroadcast((np.array([[1.1, -0.1], [0.5, 0.5]]),))

    def test_input_sizes_must_agree(self):
        with pytest.raises(ValidationError):
            DmcBroadcast((bsc(0.1), np.ones((3, 1))))

    def test_user_array_not_frozen(self):
        m = bsc(0.1)
        DmcBroadcast((m,))
        m[0, 0] = 0.9          # still writable
        assert m.flags.writeable

    def test_round_trip(self):
        ch = DmcBroadcast((bsc(0.1), erasure(0.3)))
        again = channel_from_dict(ch.to_dict())
        assert again.output_sizes == (2, 3)
        np.testing.assert_array_equal(again.transition(2), erasure(0.3))

    def test_overflow_cap(self):
        ch = DmcBroadcast((bsc(0.1),) * 3)
        with pytest.raises(AlphabetOverflowError):
            mutual_information_dmc([0.5, 0.5], [1, 2, 3], ch, max_states=10)


class TestMutualInformation:
    def test_identity(self):
        ch = DmcBroadcast((np.eye(2),))
        assert mutual_information_dmc([0.5, 0.5], [1], ch) == pytest.approx(1.0, abs=1e-15)

    def test_two_erasures(self):
        ch = DmcBroadcast((erasure(0.5), erasure(0.5)))
        v = mutual_information_dmc([0.5, 0.5], [1, 2], ch)
        assert v == pytest.approx(0.75, abs=1e-14)
        assert v == pytest.approx(mi_pooled(np.array([0.5, 0.5]), ch.transitions, [1, 2]), abs=1e-14)

    def test_independent_output(self):
        ch = DmcBroadcast((np.full((2, 3), 1 / 3),))
        assert mutual_information_dmc([0.3, 0.7], [1], ch) == pytest.approx(0.0, abs=1e-15)

    def test_empty_set_rejected(self):
        with pytest.raises(ValidationError):
            mutual_information_dmc([0.5, 0.5], [], DmcBroadcast((bsc(0.1),)))

    def test_conditional_copy(self):
        ch = DmcBroadcast((bsc(0.2), erasure(0.4)))
        px = np.array([0.3, 0.7])
        for s in ([1], [2], [1, 2]):
            assert conditional_mi_dmc(np.diag(px), s, ch) == pytest.approx(
                mutual_information_dmc(px, s, ch), abs=1e-14)

    def test_conditional_independent(self):
        ch = DmcBroadcast((bsc(0.2),))
        pux = np.outer([0.4, 0.6], [0.5, 0.5])
        assert conditional_mi_dmc(pux, [1], ch) == pytest.approx(0.0, abs=1e-15)

    def test_conditional_bsc_bruteforce(self):
        ch = DmcBroadcast((bsc(0.2),))
        pux = 0.5 * bsc(0.1)            # X = U xor noise(0.1), U uniform
        for flag in (False, True):
            got = conditional_mi_dmc(pux, [1], ch, given_u=flag)
            assert got == pytest.approx(mi_u_pooled(pux, ch.transitions, [1], flag), abs=1e-13)
        # U -> BSC(0.1) -> BSC(0.2) is BSC(0.26)
        assert conditional_mi_dmc(pux, [1], ch) == pytest.approx(1 - binary_entropy(0.26), abs=1e-13)


class TestDegradedness:
    def test_bsc_cascade(self):
        r = check_degraded_dmc(DmcBroadcast((bsc(0.2), bsc(0.1))), 2)
        assert r.feasible and r.residual <= 1e-9
        np.testing.assert_allclose(r.Q, bsc(0.125), atol=1e-6)

    def test_identical(self):
        r = check_degraded_dmc(DmcBroadcast((bsc(0.3), bsc(0.3))), 2)
        assert r.feasible
        np.testing.assert_allclose(r.Q, np.eye(2), atol=1e-6)

    def test_reversed(self):
        ch = DmcBroadcast((bsc(0.1), bsc(0.3)))
        r = check_degraded_dmc(ch, 2)
        assert not r.feasible and r.residual > 1e-3 and r.Q is None
        with pytest.raises(DegradednessError) as e:
            check_degraded_chain(ch)
        assert e.value.result.residual == r.residual

    def test_index_range(self):
        with pytest.raises(ValidationError):
            check_degraded_dmc(DmcBroadcast((bsc(0.1),)), 2)

    def test_feasible_implies_data_processing(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            strong = random_stochastic(rng, 3, 3)
            ch = DmcBroadcast((strong @ random_stochastic(rng, 3, 2), strong))
            assert check_degraded_dmc(ch, 2).feasible
            for _ in range(10):
                px = rng.dirichlet(np.ones(3))
                assert mutual_information_dmc(px, [1], ch) <= mutual_information_dmc(px, [2], ch) + 1e-12


class TestGaussian:
    def test_group_mi_examples(self):
        assert gaussian_group_mi(0.0, [1.0, 2.0], [1, 2]) == 0.0
        assert gaussian_group_mi(1.0, [1.0], [1]) == pytest.approx(0.5, abs=1e-15)
        assert gaussian_group_mi(1.0, [1.0, 1.0], [1, 2]) == pytest.approx(0.5 * np.log2(3), abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 10), st.lists(st.floats(0.05, 10), min_size=1, max_size=5), st.data())
    def test_group_mi_logdet(self, P, N, data):
        group = data.draw(st.sets(st.integers(1, len(N)), min_size=1))
        assert gaussian_group_mi(P, N, group) == pytest.approx(group_mi_logdet(P, N, group), abs=1e-10)

    def test_siso_ordering(self):
        GaussianSisoBroadcast((2.0, 1.0), 1.0).check_degraded()
        ch = GaussianSisoBroadcast((1.0, 1.0, 0.5), 1.0)
        assert ch.ordering_violations() == [2]
        with pytest.raises(DegradednessError):
            ch.check_degraded()
        with pytest.raises(ValidationError):
            GaussianSisoBroadcast((1.0,), -1.0)

    def test_mimo(self):
        ch = channel_from_dict({"type": "mimo", "Sigma": [[2, 0, 0, 2], [1, 0, 0, 1]], "S": [1, 0, 0, 1]})
        assert ch.dimension == 2 and ch.K == 2
        ch.check_degraded()
        bad = GaussianMimoBroadcast((np.diag([1.0, 2.0]), np.diag([2.0, 1.0])), np.eye(2))
        with pytest.raises(DegradednessError):
            bad.check_degraded()
        with pytest.raises(ValidationError):
            GaussianMimoBroadcast((np.eye(2),), np.zeros((2, 2)))

    def test_psd_order_examples(self):
        A = np.diag([2.0, 1.0])
        assert psd_order_check(A, A)
        assert psd_order_check(A, np.eye(2))
        assert not psd_order_check(np.diag([1.0, 2.0]), np.diag([2.0, 1.0]))
        with pytest.raises(ValidationError):
            psd_order_check(np.eye(2), np.eye(3))


def random_psd(rng, r):
    g = rng.standard_normal((r, r))
    return g @ g.T


def test_psd_order_is_a_partial_order():
    rng = np.random.default_rng(11)
    for _ in range(100):
        r = int(rng.integers(1, 5))
        A = random_psd(rng, r)
        B = A + random_psd(rng, r)
        C = B + random_psd(rng, r)
        assert psd_order_check(A, A)
        assert psd_order_check(B, A) and psd_order_check(C, B) and psd_order_check(C, A)
        if psd_order_check(A, B) and psd_order_check(B, A):
            np.testing.assert_allclose(A, B, atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_mi_monotone_in_receiver_set(nx, K, seed):
    rng = np.random.default_rng(seed)
    ch = DmcBroadcast(tuple(random_stochastic(rng, nx, int(rng.integers(2, 4))) for _ in range(K)))
    px = rng.dirichlet(np.ones(nx))
    sets = [s for r in range(1, K + 1) for s in itertools.combinations(range(1, K + 1), r)]
    vals = {s: mutual_information_dmc(px, s, ch) for s in sets}
    for a in sets:
        assert vals[a] == pytest.approx(mi_pooled(px, ch.transitions, a), abs=1e-12)
        for b in sets:
            if set(a) <= set(b):
                assert vals[a] <= vals[b] + 1e-12


def test_entropy_zero_convention():
    assert entropy(np.array([1.0, 0.0])) == 0.0
    assert entropy(np.array([0.5, 0.5])) == pytest.approx(1.0)
