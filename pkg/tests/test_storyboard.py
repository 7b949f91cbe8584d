import json

import pytest

from directorscut.errors import LockedTargetError, SchemaError, VersionError
from directorscut.scene import Timeline
from directorscut.selection import RuleParams
from directorscut.storyboard import (
    Storyboard,
    load_storyboard,
    node_seed,
    resimulate,
    save_storyboard,
    serialize_node,
    set_locked,
    simulate_all,
)
from directorscut.techniques import Category, Technique


def resim(demo_scene, demo_dataset, demo_grids, storyboard, marker_ids, seed):
    scene, timeline = demo_scene
    _, stats, model = demo_dataset
    grids, vis_grids = demo_grids
    return resimulate(
        storyboard, set(marker_ids), scene, timeline, model, stats,
        storyboard.config.params, seed, grids=grids, vis_grids=vis_grids,
    )


class TestSimulateAll:
    def test_empty_timeline(self, demo_scene, demo_dataset):
        scene, timeline = demo_scene
        _, stats, model = demo_dataset
        empty = Timeline(duration=timeline.duration, markers=(), proxies=timeline.proxies)
        storyboard = simulate_all(scene, empty, model, stats, RuleParams(), seed=1)
        assert storyboard.nodes == ()

    def test_deterministic_bytes(self, demo_scene, demo_dataset, demo_grids):
        scene, timeline = demo_scene
        _, stats, model = demo_dataset
        grids, vis_grids = demo_grids
        a = simulate_all(scene, timeline, model, stats, RuleParams(), seed=42,
                         grids=grids, vis_grids=vis_grids)
        b = simulate_all(scene, timeline, model, stats, RuleParams(), seed=42,
                         grids=grids, vis_grids=vis_grids)
        assert save_storyboard(a) == save_storyboard(b)

    def test_nodes_in_marker_time_order(self, demo_storyboard, demo_scene):
        _, timeline = demo_scene
        assert demo_storyboard.marker_ids() == [m.id for m in timeline.markers]
        assert len(demo_storyboard.nodes) == 5

    def test_node_seeds_are_stable_per_marker(self):
        assert node_seed(42, "m1") == node_seed(42, "m1")
        assert node_seed(42, "m1") != node_seed(42, "m2")
        assert node_seed(42, "m1") != node_seed(43, "m1")


class TestResimulate:
    def test_empty_set_is_identity(self, demo_scene, demo_dataset, demo_grids, demo_storyboard):
        out = resim(demo_scene, demo_dataset, demo_grids, demo_storyboard, set(), seed=7)
        assert out is demo_storyboard

    def test_unknown_marker(self, demo_scene, demo_dataset, demo_grids, demo_storyboard):
        with pytest.raises(KeyError):
            resim(demo_scene, demo_dataset, demo_grids, demo_storyboard, {"nope"}, seed=7)

    def test_locked_marker_is_an_error(self, demo_scene, demo_dataset, demo_grids, demo_storyboard):
        locked = set_locked(demo_storyboard, "m2", True)
        with pytest.raises(LockedTargetError):
            resim(demo_scene, demo_dataset, demo_grids, locked, {"m2"}, seed=7)

    def test_locked_node_bytes_survive_neighbor_resim(
        self, demo_scene, demo_dataset, demo_grids, demo_storyboard
    ):
        locked = set_locked(demo_storyboard, "m2", True)
        before = serialize_node(locked.node_by_marker("m2"))
        out = resim(demo_scene, demo_dataset, demo_grids, locked, {"m1", "m3"}, seed=99)
        assert serialize_node(out.node_by_marker("m2")) == before

    def test_lock_invariance_over_seeds(
        self, demo_scene, demo_dataset, demo_grids, demo_storyboard
    ):
        locked = set_locked(demo_storyboard, "m3", True)
        others = {"m1", "m2", "m4", "m5"}
        before = serialize_node(locked.node_by_marker("m3"))
        for seed in range(10):
            out = resim(demo_scene, demo_dataset, demo_grids, locked, others, seed=seed)
            assert serialize_node(out.node_by_marker("m3")) == before

    def test_partial_resim_respects_fast_zoom_history(
        self, demo_scene, demo_dataset, demo_grids
    ):
        scene, timeline = demo_scene
        _, stats, model = demo_dataset
        grids, vis_grids = demo_grids
        params = RuleParams()
        for seed in range(40):
            storyboard = simulate_all(
                scene, timeline, model, stats, params, seed=seed,
                grids=grids, vis_grids=vis_grids,
            )
            prev_look = storyboard.nodes[0].plan.techniques[Category.LOOK]
            if prev_look not in (Technique.QUICK_ZOOM, Technique.DOLLY_ZOOM):
                continue
            out = resim(
                demo_scene, demo_dataset, demo_grids, storyboard, {"m2"}, seed=seed + 1000
            )
            new_look = out.node_by_marker("m2").plan.techniques[Category.LOOK]
            assert new_look not in (Technique.QUICK_ZOOM, Technique.DOLLY_ZOOM)

    def test_stale_neighbor_tracking(self, demo_scene, demo_dataset, demo_grids, demo_storyboard):
        out = resim(demo_scene, demo_dataset, demo_grids, demo_storyboard, {"m2"}, seed=5)
        assert "m3" in out.stale_marker_ids
        again = resim(demo_scene, demo_dataset, demo_grids, out, {"m3"}, seed=6)
        assert "m3" not in again.stale_marker_ids
        assert "m4" in again.stale_marker_ids


class TestSerialization:
    def test_round_trip_structural_equality(self, demo_storyboard):
        data = save_storyboard(demo_storyboard)
        loaded = load_storyboard(data)
        assert loaded.marker_ids() == demo_storyboard.marker_ids()
        assert loaded.config.seed == demo_storyboard.config.seed
        assert loaded.config.params == demo_storyboard.config.params
        for a, b in zip(loaded.nodes, demo_storyboard.nodes):
            assert serialize_node(a) == serialize_node(b)

    def test_save_load_save_idempotent(self, demo_storyboard):
        first = save_storyboard(demo_storyboard)
        assert save_storyboard(load_storyboard(first)) == first

    def test_version_bump_rejected(self, demo_storyboard):
        doc = json.loads(save_storyboard(demo_storyboard))
        doc["schema_version"] = 2
        with pytest.raises(VersionError):
            load_storyboard(json.dumps(doc))

    def test_unknown_future_field_rejected(self, demo_storyboard):
        doc = json.loads(save_storyboard(demo_storyboard))
        doc["director_commentary"] = "cut!"
        with pytest.raises(VersionError):
            load_storyboard(json.dumps(doc))

    def test_truncated_document(self, demo_storyboard):
        data = save_storyboard(demo_storyboard)
        with pytest.raises(SchemaError):
            load_storyboard(data[: len(data) // 2])

    def test_locked_flag_round_trips(self, demo_storyboard):
        locked = set_locked(demo_storyboard, "m4", True)
        loaded = load_storyboard(save_storyboard(locked))
        assert loaded.node_by_marker("m4").locked
        assert not loaded.node_by_marker("m1").locked

    def test_set_locked_unknown_marker(self, demo_storyboard):
        with pytest.raises(KeyError):
            set_locked(demo_storyboard, "zz", True)
