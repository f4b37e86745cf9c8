import itertools
import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrflist.adjusting_list import ConstraintViolation
from mrflist.dag import DepDag, NodeMismatchError, validate_feasible
from mrflist.oracle import (
    InstanceTooLarge,
    check_instance,
    competitive_ratio_bound,
    count_inversions,
    feasible_permutations,
    inversion_pairs,
    kendall_tau,
    move_to_front,
    mrf_cost,
    opt_offline,
    potential,
    random_instance,
    run_adversary,
    run_with_audit,
    shrink_requests,
    transposition_path,
)


def pair_scan(a, b):
    pos = {u: i for i, u in enumerate(b)}
    return sum(pos[u] > pos[v] for u, v in itertools.combinations(a, 2))


def bfs_distance(a, b):
    a, b = tuple(a), tuple(b)
    seen = {a: 0}
    queue = deque([a])
    while queue:
        p = queue.popleft()
        if p == b:
            return seen[p]
        for i in range(len(p) - 1):
            q = p[:i] + (p[i + 1], p[i]) + p[i + 2:]
            if q not in seen:
                seen[q] = seen[p] + 1
                queue.append(q)


def brute_force_opt(dag, initial, requests, alpha):
    """Minimum over every choice of one feasible configuration per access."""
    perms = [p for p in itertools.permutations(dag.nodes) if validate_feasible(dag, p)]
    best = float("inf")
    for choice in itertools.product(perms, repeat=len(requests)):
        cost, prev = 0, tuple(initial)
        for cfg, y in zip(choice, requests):
            cost += pair_scan(prev, cfg) + alpha * (cfg.index(y) + 1)
            prev = cfg
        best = min(best, cost)
    return best if requests else 0


class TestInversions:
    def test_examples(self):
        assert count_inversions("abcd", "abcd") == 0
        assert count_inversions("abcd", "dcba") == 6
        assert count_inversions("cadb", "abcd") == 3

    def test_potential(self):
        assert count_inversions("bac", "abc") == 1
        assert potential("bca", "abc", alpha=1) == 2 * 2
        assert potential("cba", "abc", alpha=5) == 6 * 3

    def test_mismatch(self):
        with pytest.raises(NodeMismatchError):
            count_inversions("abc", "abd")

    @given(st.permutations(range(9)), st.permutations(range(9)))
    def test_against_pair_scan(self, a, b):
        assert count_inversions(a, b) == pair_scan(a, b) == len(inversion_pairs(a, b))
        assert count_inversions(a, b) == count_inversions(b, a)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_kendall_tau_is_minimal(self, n):
        for a in itertools.permutations(range(n)):
            for b in itertools.permutations(range(n)):
                assert kendall_tau(a, b) == bfs_distance(a, b)

    @given(st.permutations(range(7)), st.permutations(range(7)))
    def test_transposition_path(self, a, b):
        path = transposition_path(a, b)
        lst = list(a)
        for i in path:
            lst[i - 1], lst[i] = lst[i], lst[i - 1]
        assert lst == list(b) and len(path) == kendall_tau(a, b)

    def test_path_stays_feasible(self):
        rng = random.Random(4)
        for _ in range(50):
            inst = random_instance(rng.randrange(10**6), 6, 0)
            perms = feasible_permutations(inst.dag)
            a, b = rng.choice(perms), rng.choice(perms)
            lst = list(a)
            for i in transposition_path(a, b):
                lst[i - 1], lst[i] = lst[i], lst[i - 1]
                assert validate_feasible(inst.dag, lst)


class TestFeasiblePermutations:
    @pytest.mark.parametrize("seed", range(10))
    def test_against_filtering(self, seed):
        inst = random_instance(seed, 5, 0, edge_prob=0.4)
        expected = {p for p in itertools.permutations(inst.dag.nodes)
                    if validate_feasible(inst.dag, p)}
        got = feasible_permutations(inst.dag)
        assert set(got) == expected and len(got) == len(expected)

    def test_empty_dag(self):
        assert len(feasible_permutations(DepDag(range(5)))) == 120


class TestOptOffline:
    def test_head_access(self):
        assert opt_offline(DepDag("ab"), "ab", ["a"]).total_cost == 1

    def test_second_position(self):
        # access in place or swap first: both cost 2
        assert opt_offline(DepDag("ab"), "ab", ["b"]).total_cost == 2

    def test_repeated_tail(self):
        # two swaps up front, then three head accesses
        assert opt_offline(DepDag("abc"), "abc", ["c"] * 3).total_cost == 5

    def test_pinned_tail(self):
        dag = DepDag("abc", [("c", "a"), ("c", "b")])
        assert opt_offline(dag, "abc", ["c"] * 3).total_cost == 9

    def test_alpha_scales_access(self):
        assert opt_offline(DepDag("abc"), "abc", ["c"] * 3, alpha=5).total_cost == 2 + 15

    def test_empty_requests(self):
        assert opt_offline(DepDag("abc"), "abc", []).total_cost == 0

    def test_refuses_large(self):
        with pytest.raises(InstanceTooLarge):
            opt_offline(DepDag(range(9)), range(9), [0])

    def test_infeasible_start(self):
        with pytest.raises(ConstraintViolation):
            opt_offline(DepDag("ab", [("a", "b")]), "ab", ["a"])

    @pytest.mark.parametrize("seed", range(40))
    def test_against_brute_force(self, seed):
        rng = random.Random(seed)
        inst = random_instance(seed, rng.randint(1, 4), rng.randint(0, 4), edge_prob=0.3)
        alpha = rng.choice([1, 2, 5])
        res = opt_offline(inst.dag, inst.initial, inst.requests, alpha)
        assert res.total_cost == brute_force_opt(inst.dag, inst.initial, inst.requests, alpha)
        assert res.witness_cost(inst.requests, alpha) == res.total_cost
        assert all(validate_feasible(inst.dag, w) for w in res.witness)

    @pytest.mark.parametrize("seed", range(15))
    def test_prefix_monotone_and_below_mrf(self, seed):
        inst = random_instance(seed, 5, 10)
        costs = [opt_offline(inst.dag, inst.initial, inst.requests[:i]).total_cost
                 for i in range(len(inst.requests) + 1)]
        assert costs == sorted(costs)
        assert costs[-1] <= mrf_cost(inst.dag, inst.initial, inst.requests)


class TestAudits:
    def test_ratio_bound(self):
        assert competitive_ratio_bound(1) == 4
        assert competitive_ratio_bound(3) == 4
        assert competitive_ratio_bound(5) == 6

    @pytest.mark.parametrize("seed", range(30))
    @pytest.mark.parametrize("alpha", [1, 2, 5])
    def test_instance_checks(self, seed, alpha):
        chk = check_instance(random_instance(seed, 5, 12), alpha)
        assert chk.ok, [a for a in chk.audits if not a.ok]

    @pytest.mark.parametrize("seed", range(20))
    def test_event_bookkeeping(self, seed):
        inst = random_instance(seed, 6, 12)
        opt = opt_offline(inst.dag, inst.initial, inst.requests)
        audits = run_with_audit(inst.dag, inst.initial, inst.requests, opt.witness)
        for a in audits:
            assert a.k + a.l + 1 == a.position
            if a.delta == 1:
                # no dependency: the node ran to the head and flipped every pair it passed
                assert (a.created, a.destroyed) == (a.k, a.l)
        # amortized costs telescope to the real total plus the final potential
        lhs = sum(a.mrf_cost + a.phi_after - a.phi_before for a in audits)
        assert lhs == mrf_cost(inst.dag, inst.initial, inst.requests) + audits[-1].phi_after
        assert sum(a.opt_cost for a in audits) == opt.total_cost

    def test_witness_length_checked(self):
        with pytest.raises(ValueError):
            run_with_audit(DepDag("ab"), "ab", ["a"], [])

    def test_broken_mrf_caught_and_shrunk(self):
        fails = lambda i: not check_instance(i, 1, recurse=False).ok  # noqa: E731
        bad = next(random_instance(s, 5, 12) for s in range(500)
                   if fails(random_instance(s, 5, 12)))
        small = shrink_requests(bad, fails)
        assert fails(small) and 0 < len(small.requests) <= len(bad.requests)
        for i in range(len(small.requests)):
            dropped = small.requests[:i] + small.requests[i + 1:]
            if dropped:
                assert not fails(type(small)(small.dag, small.initial, dropped))


@settings(max_examples=300)
@given(st.permutations(range(6)), st.lists(st.integers(0, 5), max_size=20))
def test_mtf_reference(order, requests):
    trace = move_to_front(order, requests)
    for y, lst in zip(requests, trace):
        assert lst[0] == y and sorted(lst) == sorted(order)


class TestAdversary:
    def test_static_tail(self):
        res = run_adversary(4, 10, alpha=3, policy="static")
        assert res.measured == 10 * 4 * 3

    def test_mrf_n16_alpha8(self):
        res = run_adversary(16, 200, alpha=8)
        # every request hits position 16 and then takes 15 swaps
        assert res.measured == 200 * (16 * 8 + 15)
        assert res.comparator == 200 * 24
        assert res.ratio == pytest.approx(143 / 24)
        assert res.lower_bound == pytest.approx(16 * 8 / 24)
        assert res.ratio >= res.lower_bound

    def test_bad_policy(self):
        with pytest.raises(ValueError):
            run_adversary(3, 1, policy="nope")
