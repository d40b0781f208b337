import itertools
import math

import numpy as np
import pytest

from guesswork import (
    CapExceededError,
    Cipher,
    CipherSpec,
    IidSource,
    Pmf,
    attack_moment,
    build_group_xor_cipher,
    brute_force_best_cipher,
    group_xor_moment_closed,
    guessing_exponent_achieved,
    harmonic_number,
    keys_for_rate,
    optimal_attack,
)
from guesswork.cipher import attack_moment_for_orders, sorted_padded_pmf
from guesswork.guessing import GuessOrder

LN2 = math.log(2.0)


def pmf(*probs):
    return Pmf(list(probs))


class TestCipherSpec:
    def test_key_rate_exact(self):
        spec = CipherSpec(n=4, k=3, num_messages=16)
        assert spec.key_rate == 3 * LN2 / 4
        assert spec.num_keys == 8


class TestGroupXorConstruction:
    def test_forced_table(self):
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 1)
        # f(index, 0) identity; key 1 swaps within the blocks {0,1} and {2,3}
        assert cipher.table[0].tolist() == [0, 1, 2, 3]
        assert cipher.table[1].tolist() == [1, 0, 3, 2]

    def test_zero_key_bits_identity(self):
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 0)
        assert cipher.table.shape == (1, 4)
        assert cipher.table[0].tolist() == [0, 1, 2, 3]

    def test_padding(self):
        cipher = build_group_xor_cipher(pmf(0.5, 0.3, 0.2), 1)
        assert cipher.spec.num_messages == 4
        assert cipher.pmf.probs.tolist() == [0.5, 0.3, 0.2, 0.0]

    def test_reindexes_descending(self):
        cipher = build_group_xor_cipher(pmf(0.1, 0.6, 0.3), 0)
        assert cipher.pmf.probs.tolist() == [0.6, 0.3, 0.1]

    def test_json_roundtrip(self):
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 1)
        again = Cipher.from_json_dict(cipher.to_json_dict())
        assert np.array_equal(again.table, cipher.table)
        assert np.allclose(again.pmf.probs, cipher.pmf.probs)


class TestOptimalAttack:
    def test_group_sweep(self):
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 1)
        for y in (0, 1):
            order = optimal_attack(cipher, cipher.pmf, y)
            assert order.rank[0] == 1 and order.rank[1] == 2
        for y in (2, 3):
            order = optimal_attack(cipher, cipher.pmf, y)
            assert order.rank[2] == 1 and order.rank[3] == 2

    def test_identity_cipher_reveals_message(self):
        # without key bits the cipher is a fixed public bijection: the
        # posterior is a point mass on the decode of y
        cipher = build_group_xor_cipher(pmf(0.2, 0.5, 0.3), 0)
        for y in range(3):
            order = optimal_attack(cipher, cipher.pmf, y)
            assert order.rank[y] == 1

    def test_uniform_tie_break(self):
        cipher = build_group_xor_cipher(pmf(0.25, 0.25, 0.25, 0.25), 1)
        order = optimal_attack(cipher, cipher.pmf, 0)
        # block {0,1} first by ascending index, zero-posterior block after
        assert order.rank.tolist() == [1, 2, 3, 4]


class TestAttackMoment:
    def test_no_key_is_decodable(self):
        # one guess suffices when there is no key to hide behind
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 0)
        assert attack_moment(cipher, cipher.pmf, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_key_covering_messages_is_plain_guessing(self):
        # the opposite end: one block spanning everything degenerates to
        # unconditional probability-order guessing
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 2)
        assert attack_moment(cipher, cipher.pmf, 1.0) == pytest.approx(2.0, abs=1e-14)

    def test_group_xor_value(self):
        cipher = build_group_xor_cipher(pmf(0.4, 0.3, 0.2, 0.1), 1)
        assert attack_moment(cipher, cipher.pmf, 1.0) == pytest.approx(1.4, abs=1e-14)

    def test_point_mass_between_one_and_keys(self):
        p = pmf(1.0, 0.0, 0.0, 0.0)
        for k in (0, 1, 2):
            cipher = build_group_xor_cipher(p, k)
            for rho in (0.5, 1.0, 2.0):
                value = attack_moment(cipher, cipher.pmf, rho)
                assert 1.0 - 1e-12 <= value <= (2.0 ** k) ** rho + 1e-12

    def test_optimal_beats_random_orders(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            size = int(rng.integers(2, 9))
            p = Pmf(rng.dirichlet(np.ones(size)), tol=1e-9)
            k = int(rng.integers(0, 3))
            rho = float(rng.uniform(0.3, 2.0))
            cipher = build_group_xor_cipher(p, k)
            best = attack_moment(cipher, cipher.pmf, rho)
            n_msgs = cipher.spec.num_messages
            for _ in range(5):
                orders = [GuessOrder(rng.permutation(n_msgs) + 1) for _ in range(n_msgs)]
                other = attack_moment_for_orders(cipher, cipher.pmf, rho, orders)
                assert best <= other + 1e-12

    def test_posterior_tie_invariance(self):
        # equal posteriors commute: swapping tied messages leaves the moment alone
        p = pmf(0.3, 0.3, 0.2, 0.2)
        cipher = build_group_xor_cipher(p, 1)
        rho = 1.3
        base = attack_moment(cipher, cipher.pmf, rho)
        n_msgs = cipher.spec.num_messages
        orders = []
        for y in range(n_msgs):
            order = optimal_attack(cipher, cipher.pmf, y)
            rank = order.rank.copy()
            weights = cipher.pmf.probs * (cipher.table == y).sum(axis=0)
            for a in range(n_msgs):
                for b in range(a + 1, n_msgs):
                    if weights[a] == weights[b]:
                        rank[a], rank[b] = rank[b], rank[a]
            orders.append(GuessOrder(rank))
        assert attack_moment_for_orders(cipher, cipher.pmf, rho, orders) == pytest.approx(
            base, abs=1e-13
        )


class TestClosedForm:
    def test_example(self):
        assert group_xor_moment_closed(pmf(0.4, 0.3, 0.2, 0.1), 1, 1.0) == pytest.approx(
            1.4, abs=1e-15
        )

    def test_single_group_is_plain_guessing(self):
        p = pmf(0.4, 0.3, 0.2, 0.1)
        assert group_xor_moment_closed(p, 2, 1.0) == pytest.approx(2.0, abs=1e-15)

    def test_uniform_four(self):
        assert group_xor_moment_closed(pmf(0.25, 0.25, 0.25, 0.25), 1, 1.0) == pytest.approx(
            1.5, abs=1e-15
        )

    def test_matches_exact_attack(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            size = int(rng.integers(2, 65))
            k = int(rng.integers(0, 5))
            rho = float(rng.uniform(0.2, 2.5))
            p = Pmf(rng.dirichlet(np.ones(size)), tol=1e-9)
            cipher = build_group_xor_cipher(p, k)
            assert group_xor_moment_closed(p, k, rho) == pytest.approx(
                attack_moment(cipher, cipher.pmf, rho), abs=1e-12
            )


class TestBruteForce:
    def test_zero_keys(self):
        # every keyless cipher is a fixed public bijection, so the best the
        # designer can force is a single guess
        p = pmf(0.5, 0.3, 0.2)
        result = brute_force_best_cipher(p, 0, 1.0)
        assert result.max_moment == pytest.approx(1.0, abs=1e-14)

    def test_uniform_all_ciphers_equal(self):
        p = pmf(0.25, 0.25, 0.25, 0.25)
        result = brute_force_best_cipher(p, 1, 1.0)
        assert result.max_moment == pytest.approx(
            group_xor_moment_closed(p, 1, 1.0), abs=1e-12
        )

    def test_matches_full_enumeration(self):
        # oracle for the oracle: enumerate ordered tables without reductions
        rng = np.random.default_rng(3)
        for _ in range(3):
            size = int(rng.integers(2, 4))
            rho = float(rng.uniform(0.3, 2.0))
            p = Pmf(rng.dirichlet(np.ones(size)), tol=1e-9)
            perms = list(itertools.permutations(range(size)))
            best_full = max(
                attack_moment(Cipher(CipherSpec(1, 1, size), np.array(tables), p), p, rho)
                for tables in itertools.product(perms, repeat=2)
            )
            result = brute_force_best_cipher(p, 1, rho)
            assert result.max_moment == pytest.approx(best_full, abs=1e-12)

    def test_beats_group_xor_when_divisible(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            p = Pmf(rng.dirichlet(np.ones(4)), tol=1e-9)
            rho = float(rng.uniform(0.3, 2.0))
            result = brute_force_best_cipher(p, 1, rho)
            assert result.max_moment >= group_xor_moment_closed(p, 1, rho) - 1e-12

    def test_example_bracket(self):
        p = pmf(0.5, 0.3, 0.2)
        rho = 1.0
        result = brute_force_best_cipher(p, 1, rho)
        assert result.max_moment >= group_xor_moment_closed(p, 1, rho) - 1e-12
        # ceiling from the saturated-cost optimum via the harmonic constant
        from guesswork import integer_bruteforce

        value, _ = integer_bruteforce(p, rho, LN2, 1)
        ceiling = 2.0 ** rho * math.exp(value)
        assert result.max_moment <= ceiling + 1e-9

    def test_guard(self):
        with pytest.raises(CapExceededError):
            brute_force_best_cipher(pmf(*([1.0 / 6] * 6)), 1, 1.0)
        with pytest.raises(CapExceededError):
            brute_force_best_cipher(pmf(0.5, 0.5), 3, 1.0)

    def test_thread_determinism(self):
        p = pmf(0.4, 0.3, 0.2, 0.1)
        a = brute_force_best_cipher(p, 2, 0.7, threads=1, chunk=100)
        b = brute_force_best_cipher(p, 2, 0.7, threads=4, chunk=100)
        assert a.max_moment == b.max_moment
        assert np.array_equal(a.witness.table, b.witness.table)


class TestAchievedExponent:
    def test_key_count_rounding(self):
        assert keys_for_rate(8, 0.3) == 4
        assert keys_for_rate(1, LN2) == 1
        assert keys_for_rate(2, LN2) == 2

    def test_large_rate_approaches_plain_guessing(self):
        model = IidSource(pmf(0.8, 0.2))
        n = 6
        rate = math.log(2.0) * (1.0 + 1.0 / n)
        achieved = guessing_exponent_achieved(model, n, 1.0, rate)
        # key space covers the messages: attack degenerates to sorted guessing
        from guesswork import materialize, moment, sort_desc

        p_n = materialize(model, n)
        desc = np.empty(p_n.size, dtype=int)
        desc[sort_desc(p_n)] = np.arange(1, p_n.size + 1)
        plain = moment(GuessOrder(desc), p_n, 1.0)
        assert achieved.moment == pytest.approx(plain, rel=1e-12)

    def test_floor_constant_fields(self):
        model = IidSource(pmf(0.8, 0.2))
        achieved = guessing_exponent_achieved(model, 8, 1.0, 0.3)
        assert achieved.k == 4
        assert achieved.num_keys == 16
        assert achieved.num_messages == 256
        c = harmonic_number(256)
        assert achieved.harmonic == pytest.approx(c, rel=1e-15)
        assert achieved.floor_constant == pytest.approx(
            1.0 / ((2 * c) ** 1.0 * 3.0), rel=1e-14
        )

    def test_within_gap_bound_of_compression_value(self):
        # cross-module: the achieved exponent sits within
        # ln((4 H_N)^rho (2+rho))/n of the saturated-cost optimum
        from guesswork import materialize, relaxed_optimum

        model = IidSource(pmf(0.8, 0.2))
        n, rho, rate = 8, 1.0, 0.3
        achieved = guessing_exponent_achieved(model, n, rho, rate)
        relaxed = relaxed_optimum(materialize(model, n), n, rho, rate)
        bound = math.log((4.0 * achieved.harmonic) ** rho * (2.0 + rho)) / n
        assert abs(achieved.exponent - relaxed.value) <= bound + relaxed.slack
