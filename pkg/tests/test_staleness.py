import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagsim.errors import NotAnAncestor, NotInPast
from dagsim.fixtures import fork_example
from dagsim.oracles import lca_ancestor_lists, random_dag, stale_set_direct
from dagsim.staleness import distance, is_stale, lca, stale_set
from dagsim.store import BlockDag


def make_chain(dag, n, start=None, miner=0, tag=b"c"):
    tip = start if start is not None else dag.genesis
    out = []
    for i in range(n):
        tip = dag.insert(tag + i.to_bytes(4, "big"), [tip], miner).id
        out.append(tip)
    return out


class TestLca:
    def test_reflexive(self):
        dag = BlockDag()
        x = dag.insert(b"x", [dag.genesis], 0).id
        assert lca(dag, x, x) == x

    def test_fixture_fork(self):
        fx = fork_example()
        assert lca(fx.dag, fx.c, fx.w) == fx.g
        assert lca(fx.dag, fx.d, fx.cu) == fx.b

    def test_all_pairs_match_ancestor_intersection(self):
        dag = random_dag(random.Random(21), 60)
        ids = list(dag)
        for a in ids[::3]:
            for b in ids[::4]:
                assert lca(dag, a, b) == lca_ancestor_lists(dag, a, b)


class TestDistance:
    def test_zero_iff_equal(self):
        dag = BlockDag()
        assert distance(dag, dag.genesis, dag.genesis) == 0

    def test_parent_is_one_step(self):
        dag = BlockDag()
        x = dag.insert(b"x", [dag.genesis], 0).id
        assert distance(dag, x, dag.genesis) == 1

    def test_chain_of_ten(self):
        dag = BlockDag()
        chain = make_chain(dag, 10)
        assert distance(dag, chain[-1], dag.genesis) == 10

    def test_not_an_ancestor(self):
        fx = fork_example()
        with pytest.raises(NotAnAncestor):
            distance(fx.dag, fx.c, fx.w)


class TestStaleSet:
    def test_genesis_empty(self):
        dag = BlockDag()
        assert stale_set(dag, dag.genesis, 1).members == frozenset()

    def test_block_referenced_too_late_is_stale(self):
        # Chain of p+1 blocks; a genesis child picked up only by the tip.
        p = 3
        dag = BlockDag()
        z = dag.insert(b"z", [dag.genesis], 1).id
        chain = make_chain(dag, p)
        tip = dag.insert(b"tip", [chain[-1], z], 0).id
        assert distance(dag, tip, lca(dag, z, tip)) == p + 1
        assert stale_set(dag, tip, p).members == {z}
        assert is_stale(dag, tip, z, p)

    def test_age_exactly_p_is_fresh(self):
        p = 3
        dag = BlockDag()
        z = dag.insert(b"z", [dag.genesis], 1).id
        chain = make_chain(dag, p - 1)
        tip = dag.insert(b"tip", [chain[-1], z], 0).id
        assert distance(dag, tip, lca(dag, z, tip)) == p
        assert stale_set(dag, tip, p).members == frozenset()

    def test_verdict_persists_to_descendants(self):
        p = 3
        dag = BlockDag()
        z = dag.insert(b"z", [dag.genesis], 1).id
        chain = make_chain(dag, p)
        tip = dag.insert(b"tip", [chain[-1], z], 0).id
        deeper = make_chain(dag, 5, start=tip, tag=b"deep")
        for t in deeper:
            assert is_stale(dag, t, z, p)

    def test_not_in_past_raises(self):
        fx = fork_example()
        with pytest.raises(NotInPast):
            is_stale(fx.dag, fx.c, fx.w, 3)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(10, 90), st.integers(1, 5))
def test_stale_sets_match_direct_recomputation(seed, size, p):
    dag = random_dag(random.Random(seed), size)
    ids = list(dag)
    rng = random.Random(seed + 1)
    for tip in rng.sample(ids, min(4, len(ids))):
        assert set(stale_set(dag, tip, p).members) == stale_set_direct(dag, tip, p)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_verdicts_inherited_from_parent_tip(seed):
    p = 2
    dag = random_dag(random.Random(seed), 70)
    for bid in list(dag)[1:]:
        parent = dag.get(bid).parent
        s_b = stale_set(dag, bid, p).members
        s_p = stale_set(dag, parent, p).members
        past_parent = dag.past(parent)
        assert {x for x in s_b if x in past_parent} == set(s_p)


def test_all_honest_simulation_has_no_stale_blocks():
    from dagsim.sim import SimConfig, Simulation

    cfg = SimConfig(alpha=0.5, beta=0.0, players=3, p=4, rounds=300, seed=2, valuation=False)
    sim = Simulation(cfg)
    sim.run()
    tip = sim.dag.id_at(sim.players[0].view.tip)
    assert stale_set(sim.dag, tip, cfg.p).members == frozenset()
