from __future__ import annotations

import random

import pytest

from glasskit.cid import build_dag, cid_of_block
from glasskit.crypto import SigningKeypair
from glasskit.errors import BlockCorrupt, ContentUnavailable, SwarmRejected
from glasskit.swarm import (
    Network,
    NodeHandle,
    NodeId,
    RoutingTable,
    SwarmKey,
    content_key_digest,
    xor_distance,
)


def _network(seed: int = 3, size: int = 8, key_seed: int = 1):
    rng = random.Random(key_seed)
    key = SwarmKey.generate(rng)
    net = Network(key, seed=seed)
    handles = [net.join(SigningKeypair.generate(rng), key) for _ in range(size)]
    return net, key, handles, rng


class TestSwarmKey:
    def test_fingerprint_is_hash_of_key(self):
        key = SwarmKey(b"\x07" * 32)
        from glasskit.crypto import sha256

        assert key.fingerprint == sha256(b"\x07" * 32)

    def test_length_enforced(self):
        with pytest.raises(ValueError):
            SwarmKey(b"short")


class TestRoutingTable:
    def test_bucket_placement_by_distance_msb(self):
        owner = NodeId(bytes(31) + b"\x01")
        table = RoutingTable(owner, k=2)
        near = NodeId(bytes(31) + b"\x03")  # distance 0b10 -> bucket 1
        table.insert(near)
        assert table.buckets[1] == [near]

    def test_capacity_and_newcomer_drop(self):
        owner = NodeId(bytes(32))
        table = RoutingTable(owner, k=2)
        # all of these differ from owner in the top bit -> same bucket
        ids = [NodeId(b"\x80" + bytes(30) + bytes([i])) for i in range(5)]
        for node in ids:
            table.insert(node)
        assert table.buckets[255] == ids[:2]

    def test_self_never_inserted(self):
        owner = NodeId(bytes(32))
        table = RoutingTable(owner)
        table.insert(owner)
        assert table.known() == []


class TestCreateAndJoin:
    def test_fresh_network_is_empty(self):
        key = SwarmKey.generate(random.Random(1))
        net = Network(key, seed=0)
        assert net.member_count() == 0
        assert all(not s.provider_records for s in net.nodes.values())

    def test_join_five_members(self):
        net, _, handles, _ = _network(size=5)
        assert net.member_count() == 5
        assert all(h.member for h in handles)

    def test_equal_seeds_replay_identical_event_orders(self):
        def trace(seed: int) -> bytes:
            rng = random.Random(17)
            key = SwarmKey.generate(rng)
            net = Network(key, seed=seed)
            hs = [net.join(SigningKeypair.generate(rng), key)
                  for _ in range(25)]
            data = rng.randbytes(3000)
            root, blocks = build_dag(data, 256)
            hs[3].provide(blocks)
            hs[11].fetch(root)
            hs[20].find_providers(root)
            return net.export_trace()

        assert trace(5) == trace(5)

    def test_wrong_key_rejected(self):
        net, key, _, rng = _network()
        wrong = bytearray(key.key)
        wrong[5] ^= 0x01
        with pytest.raises(SwarmRejected):
            net.join(SigningKeypair.generate(rng), SwarmKey(bytes(wrong)))

    def test_rejected_node_observes_no_state_and_cannot_fetch(self):
        net, key, handles, rng = _network()
        data = b"secret block"
        cid = cid_of_block(data)
        handles[0].provide({cid: data})
        members_before = set(net.nodes)

        outsider = NodeHandle(net, SigningKeypair.generate(rng))
        bad_key = SwarmKey.generate(rng)
        with pytest.raises(SwarmRejected):
            outsider.join(bad_key)
        # subsequent operations all fail with swarm-rejected
        with pytest.raises(SwarmRejected):
            outsider.fetch(cid)
        with pytest.raises(SwarmRejected):
            outsider.find_providers(cid)
        with pytest.raises(SwarmRejected):
            outsider.provide({cid: data})
        with pytest.raises(SwarmRejected):
            outsider.blocks
        assert set(net.nodes) == members_before


class TestProvide:
    def test_provide_then_find_from_any_member(self):
        net, _, handles, rng = _network(size=10)
        data = rng.randbytes(64)
        cid = cid_of_block(data)
        handles[2].provide({cid: data})
        for handle in handles:
            assert handle.find_providers(cid) == {handles[2].node_id}

    def test_two_providers_give_provider_set_of_two(self):
        net, _, handles, rng = _network(size=10)
        data = rng.randbytes(64)
        cid = cid_of_block(data)
        handles[1].provide({cid: data})
        handles[7].provide({cid: data})
        found = handles[4].find_providers(cid)
        assert found == {handles[1].node_id, handles[7].node_id}

    def test_records_land_on_exactly_alpha_closest_in_50_node_network(self):
        # oracle: brute-force XOR sort of every member id against the
        # record key
        net, _, handles, rng = _network(seed=9, size=50)
        for trial in range(10):
            data = rng.randbytes(32)
            cid = cid_of_block(data)
            provider = handles[rng.randrange(50)]
            provider.provide({cid: data})
            target = content_key_digest(cid)
            expected = set(sorted(
                net.nodes, key=lambda n: (xor_distance(n.id, target), n.id)
            )[: net.alpha])
            holders = {
                node_id for node_id, state in net.nodes.items()
                if provider.node_id in state.provider_records.get(cid, set())
            }
            assert holders == expected

    def test_inconsistent_blockset_rejected(self):
        net, _, handles, _ = _network()
        with pytest.raises(BlockCorrupt):
            handles[0].provide({cid_of_block(b"a"): b"b"})


class TestFindProviders:
    def test_unadvertised_cid_empty_set(self):
        net, _, handles, _ = _network()
        assert handles[0].find_providers(cid_of_block(b"nothing")) == set()

    def test_completeness_at_desk_scale(self):
        # every member finds the provider in networks of 5..50 nodes
        for size in (5, 12, 23, 37, 50):
            net, _, handles, rng = _network(seed=size, size=size)
            data = rng.randbytes(48)
            cid = cid_of_block(data)
            handles[size // 2].provide({cid: data})
            for handle in handles:
                assert handle.find_providers(cid) == {handles[size // 2].node_id}

    def test_visited_count_bounded_by_full_scan(self):
        net, _, handles, rng = _network(seed=4, size=40)
        data = rng.randbytes(32)
        cid = cid_of_block(data)
        handles[0].provide({cid: data})
        handles[9].find_providers(cid)
        event = net.trace[-1]
        assert event["event"] == "lookup"
        assert event["visited"] <= net.member_count()


class TestFetch:
    def test_end_to_end_roundtrip(self):
        net, _, handles, rng = _network(size=12)
        data = rng.randbytes(20_000)
        root, blocks = build_dag(data, 1024)
        handles[0].provide(blocks)
        assert handles[5].fetch(root) == data

    def test_fetcher_becomes_distributor(self):
        net, _, handles, rng = _network(size=12)
        data = rng.randbytes(5000)
        root, blocks = build_dag(data, 1024)
        handles[0].provide(blocks)
        before = handles[3].find_providers(root)
        assert before == {handles[0].node_id}
        handles[7].fetch(root)
        after = handles[3].find_providers(root)
        assert after == {handles[0].node_id, handles[7].node_id}
        assert len(after) == len(before) + 1

    def test_no_provider_means_content_unavailable(self):
        net, _, handles, _ = _network()
        with pytest.raises(ContentUnavailable):
            handles[0].fetch(cid_of_block(b"never provided"))

    def test_corrupt_provider_detected_and_honest_replica_used(self):
        net, _, handles, rng = _network(size=10)
        data = rng.randbytes(600)
        root, blocks = build_dag(data, 1024)
        poisoned, honest, fetcher = handles[0], handles[1], handles[6]
        poisoned.provide(blocks)
        honest.provide(blocks)
        # poison every copy the first provider holds
        for cid in list(poisoned.blocks):
            poisoned.blocks[cid] = b"poisoned!" + poisoned.blocks[cid]
        assert fetcher.fetch(root) == data

    def test_all_replicas_corrupt_raises_block_corrupt(self):
        net, _, handles, rng = _network(size=10)
        data = rng.randbytes(600)
        root, blocks = build_dag(data, 1024)
        handles[0].provide(blocks)
        for cid in list(handles[0].blocks):
            handles[0].blocks[cid] = b"junk" + handles[0].blocks[cid]
        with pytest.raises(BlockCorrupt):
            handles[4].fetch(root)

    def test_multi_level_dag_fetch(self):
        net, _, handles, rng = _network(size=8)
        data = rng.randbytes(16 * 300)  # forces a two-level tree at chunk 16
        root, blocks = build_dag(data, 16)
        handles[2].provide(blocks)
        assert handles[6].fetch(root) == data


class TestGatingInvariant:
    def test_no_nonmember_sequence_changes_member_state(self):
        net, key, handles, rng = _network(size=6)
        data = rng.randbytes(256)
        root, blocks = build_dag(data, 64)
        handles[1].provide(blocks)

        def snapshot():
            return {
                node_id.text: (sorted(c.text for c in state.blocks),
                               {c.text: sorted(p.text for p in providers)
                                for c, providers in state.provider_records.items()},
                               [n.text for b in state.table.buckets for n in b])
                for node_id, state in net.nodes.items()
            }

        before = snapshot()
        for trial in range(10):
            outsider = NodeHandle(net, SigningKeypair.generate(rng))
            wrong = SwarmKey.generate(rng)
            for operation in (
                lambda: outsider.join(wrong),
                lambda: outsider.provide({root: blocks[root]}),
                lambda: outsider.find_providers(root),
                lambda: outsider.fetch(root),
            ):
                with pytest.raises(SwarmRejected):
                    operation()
        assert snapshot() == before
