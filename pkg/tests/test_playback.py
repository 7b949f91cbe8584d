import math

import numpy as np
import pytest

from directorscut import geometry as geo
from directorscut.placement import ShotPlan, look_at
from directorscut.playback import (
    CameraFrame,
    CameraTrack,
    PlaybackConfig,
    apply_leading,
    execute,
    export_track,
    parse_track_json,
    resolve_position,
    subject_rest_windows,
)
from directorscut.proxy import OccupancyGrid, is_occupied, sphere_blocked
from directorscut.scene import (
    Keyframe,
    KeyframeTrack,
    ProxyVolume,
    SceneDescription,
    ShotMarker,
    Timeline,
)
from directorscut.selection import RuleParams
from directorscut.storyboard import SimulationConfig, Storyboard, StoryboardNode
from directorscut.techniques import Category, Technique
from helpers import character, line_track, static_track


def manual_storyboard(plans, seed=0):
    nodes = tuple(
        StoryboardNode(plan=p, locked=False, preview_ref=f"previews/{p.marker_id}.svg",
                       simulation_seed=seed + i)
        for i, p in enumerate(plans)
    )
    return Storyboard(nodes=nodes, config=SimulationConfig(seed=seed, params=RuleParams()))


def make_plan(marker_id, time, pose, focus, techniques=None):
    base = {
        Category.POSITIONING: Technique.MEDIUM,
        Category.LOOK: Technique.STATIONARY_SHOT,
        Category.TRACKING: Technique.NO_TRACKING,
        Category.FX: Technique.NO_FX,
    }
    if techniques:
        base.update(techniques)
    return ShotPlan(
        marker_id=marker_id, techniques=base, pose=pose, focus_point=focus,
        settings={"marker_time": time},
    )


def single_marker_setup(track, marker_time=0.0, duration=4.0, techniques=None,
                        camera=(0.0, 1.5, -3.0)):
    hero = character("hero", track)
    scene = SceneDescription(objects=(hero,))
    marker = ShotMarker(id="m1", time=marker_time, targets=("hero",))
    timeline = Timeline(
        duration=duration, markers=(marker,),
        proxies=(ProxyVolume((-20, 0, -20), (20, 8, 20), 0.5),),
    )
    from directorscut.scene import subject_point

    focus = subject_point(scene, ("hero",), marker_time)
    plan = make_plan("m1", marker_time, look_at(camera, focus), focus, techniques)
    return scene, timeline, manual_storyboard([plan])


class TestExecuteBasics:
    def test_stationary_holds_position_and_tracks_subject(self):
        track = line_track((0, 0.9, 0), (4, 0.9, 0), 0.0, 4.0)
        scene, timeline, storyboard = single_marker_setup(track)
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30))
        positions = {f.position for f in out.frames}
        assert positions == {storyboard.nodes[0].plan.pose.position}
        first, last = out.frames[0], out.frames[-1]
        assert first.look_dir != last.look_dir  # orientation follows the walker

    def test_frame_count_inclusive_endpoints(self):
        scene, timeline, storyboard = single_marker_setup(
            static_track((0, 0.9, 0)), duration=2.0
        )
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30))
        assert len(out.frames) == 61

    def test_empty_storyboard_gives_empty_track(self):
        scene = SceneDescription(objects=())
        timeline = Timeline(duration=1.0, markers=(),
                            proxies=(ProxyVolume((0, 0, 0), (1, 1, 1), 0.5),))
        storyboard = Storyboard(nodes=(), config=SimulationConfig(seed=0, params=RuleParams()))
        out = execute(storyboard, scene, timeline)
        assert out.frames == ()
        assert export_track(out, "csv").decode().strip() == (
            "wall_time,scene_time,px,py,pz,dir_x,dir_y,dir_z,fov,time_scale"
        )

    def test_slow_motion_time_scale(self):
        scene, timeline, storyboard = single_marker_setup(
            static_track((0, 0.9, 0)), duration=2.0,
            techniques={Category.FX: Technique.SLOW_MOTION},
        )
        config = PlaybackConfig(fps=30, slow_mo_factor=0.4)
        out = execute(storyboard, scene, timeline, config=config)
        # 2 s of scene takes 5 s of wall time; after 1 s wall, 0.4 s scene passed
        frame = out.frames[30]
        assert frame.wall_time == pytest.approx(1.0)
        assert frame.scene_time == pytest.approx(0.4, abs=1e-9)
        for a, b in zip(out.frames, out.frames[1:]):
            slope = (b.scene_time - a.scene_time) * config.fps
            assert slope == pytest.approx(0.4, abs=1e-9)
            assert a.time_scale == 0.4

    def test_dolly_zoom_invariant(self):
        track = line_track((0, 0.9, 0), (0.5, 0.9, 0.5), 0.0, 4.0)
        scene, timeline, storyboard = single_marker_setup(
            track, duration=4.0,
            techniques={Category.LOOK: Technique.DOLLY_ZOOM,
                        Category.TRACKING: Technique.NO_TRACKING},
            camera=(0.0, 1.5, -2.0),
        )
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30))
        from directorscut.scene import subject_point

        constants = []
        for f in out.frames:
            subject = subject_point(scene, ("hero",), f.scene_time)
            d = geo.dist(f.position, subject)
            constants.append(d * math.tan(f.fov / 2.0))
        base = constants[0]
        for k in constants:
            assert abs(k - base) / base <= 0.01
        # the camera actually traveled backward
        assert geo.dist(out.frames[0].position, out.frames[-1].position) == pytest.approx(
            2.0, abs=0.05
        )

    def test_quick_zoom_narrows_then_holds(self):
        scene, timeline, storyboard = single_marker_setup(
            static_track((0, 0.9, 0)), duration=2.0,
            techniques={Category.LOOK: Technique.QUICK_ZOOM},
        )
        config = PlaybackConfig(fps=30, quick_zoom_duration=0.25, zoom_narrow_factor=0.55)
        out = execute(storyboard, scene, timeline, config=config)
        f0 = out.frames[0].fov
        settled = [f.fov for f in out.frames if f.wall_time >= 0.25]
        assert all(fv == pytest.approx(f0 * 0.55, rel=1e-9) for fv in settled)
        assert out.frames[3].fov < f0  # narrowing during the zoom

    def test_steadycam_follows_moving_subject(self):
        track = line_track((0, 0.9, 0), (6, 0.9, 0), 0.0, 4.0)
        scene, timeline, storyboard = single_marker_setup(
            track, duration=4.0,
            techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING},
        )
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30))
        start = out.frames[0].position
        end = out.frames[-1].position
        assert end[0] > start[0] + 4.0  # moved with the subject
        # smooth: no intra-segment jumps
        for a, b in zip(out.frames, out.frames[1:]):
            assert geo.dist(a.position, b.position) < 0.5

    def test_handheld_differs_from_steadycam_but_stays_close(self):
        track = line_track((0, 0.9, 0), (6, 0.9, 0), 0.0, 4.0)
        scene, timeline, sb_steady = single_marker_setup(
            track, duration=4.0, techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING}
        )
        _, _, sb_hand = single_marker_setup(
            track, duration=4.0, techniques={Category.TRACKING: Technique.HANDHELD_TRACKING}
        )
        config = PlaybackConfig(fps=30, handheld_amplitude=0.02)
        steady = execute(sb_steady, scene, timeline, config=config)
        hand = execute(sb_hand, scene, timeline, config=config)
        deltas = [
            geo.dist(a.position, b.position)
            for a, b in zip(steady.frames[1:], hand.frames[1:])
        ]
        assert max(deltas) > 1e-4
        assert max(deltas) < 0.1

    def test_variant_tracks_redirect_subject(self):
        track = static_track((0, 0.9, 0))
        scene, timeline, storyboard = single_marker_setup(
            track, duration=2.0, techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING}
        )
        variant = {"hero": line_track((0, 0.9, 0), (0, 0.9, 6), 0.0, 2.0)}
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30),
                      variant_tracks=variant)
        assert out.frames[-1].position[2] > 2.0


class TestLeading:
    def test_camera_at_rest_before_stop(self):
        # hero walks until t=3 then rests; lead 0.3 -> still by t=2.7
        track = KeyframeTrack(keys=(
            Keyframe(0.0, (0, 0.9, 0)), Keyframe(3.0, (6, 0.9, 0)), Keyframe(4.0, (6, 0.9, 0)),
        ))
        scene, timeline, storyboard = single_marker_setup(
            track, duration=4.0, techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING}
        )
        config = PlaybackConfig(fps=30, lead_time=0.3)
        out = execute(storyboard, scene, timeline, config=config)
        for a, b in zip(out.frames, out.frames[1:]):
            if 2.7 <= b.wall_time <= 3.0:
                speed = geo.dist(a.position, b.position) * config.fps
                assert speed <= 1e-3, b.wall_time

    def test_two_stops_both_respected(self):
        track = KeyframeTrack(keys=(
            Keyframe(0.0, (0, 0.9, 0)), Keyframe(1.5, (3, 0.9, 0)),
            Keyframe(2.0, (3, 0.9, 0)), Keyframe(3.5, (6, 0.9, 0)),
            Keyframe(4.0, (6, 0.9, 0)),
        ))
        scene, timeline, storyboard = single_marker_setup(
            track, duration=4.0, techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING}
        )
        config = PlaybackConfig(fps=30, lead_time=0.3)
        out = execute(storyboard, scene, timeline, config=config)
        windows = subject_rest_windows(scene, ("hero",), 0.0, 4.0)
        assert [w[0] for w in windows] == [1.5, 3.5]
        for stop, _ in windows:
            for a, b in zip(out.frames, out.frames[1:]):
                if stop - config.lead_time <= b.wall_time <= stop:
                    assert geo.dist(a.position, b.position) * config.fps <= 1e-3

    def test_apply_leading_standalone(self):
        fps = 30.0
        frames = [
            CameraFrame(wall_time=i / fps, scene_time=i / fps,
                        position=(i / fps, 0.0, 0.0), look_dir=(0, 0, 1), up=(0, 1, 0),
                        fov=1.0, time_scale=1.0)
            for i in range(121)
        ]
        out = apply_leading(frames, [3.0], lead_time=0.3, fps=fps)
        for a, b in zip(out, out[1:]):
            if 2.7 <= b.wall_time <= 3.0:
                assert geo.dist(a.position, b.position) * fps <= 1e-3

    def test_apply_leading_without_stops_is_identity(self):
        fps = 30.0
        frames = [
            CameraFrame(wall_time=i / fps, scene_time=i / fps,
                        position=(i / fps, 0.0, 0.0), look_dir=(0, 0, 1), up=(0, 1, 0),
                        fov=1.0, time_scale=1.0)
            for i in range(31)
        ]
        assert apply_leading(frames, [], 0.3, fps) == frames
        assert apply_leading(frames, [9.0], 0.3, fps) == frames  # stop outside segment


class TestResolveCollision:
    def make_wall_grid(self):
        occ = np.zeros((16, 16, 16), dtype=bool)
        occ[8, :, :] = True  # wall slab x in [4.0, 4.5) at cell 0.5
        return OccupancyGrid(origin=(0, 0, 0), cell_size=0.5, dims=(16, 16, 16), occupancy=occ)

    def test_free_space_unchanged(self):
        grid = self.make_wall_grid()
        p = (1.0, 1.0, 1.0)
        assert resolve_position(grid, p, p) == p

    def test_pushout_along_face_normal(self):
        grid = self.make_wall_grid()
        # 0.1 m inside the wall face at x=4.0; sphere radius 0.2
        p = (4.1, 4.0, 4.0)
        resolved = resolve_position(grid, p, (3.0, 4.0, 4.0))
        assert not sphere_blocked(grid, resolved, 0.2)
        # oracle: brute force over the six axis directions at fine steps
        best = None
        for direction in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]:
            for i in range(1, 801):
                d = i * 0.005
                q = geo.add(p, geo.scale(direction, d))
                if not sphere_blocked(grid, q, 0.2):
                    if best is None or d < best[0]:
                        best = (d, direction)
                    break
        assert best[1] == (-1, 0, 0)
        assert geo.dist(resolved, p) == pytest.approx(best[0], abs=0.01)
        # expected magnitude: 0.1 penetration + 0.2 radius
        assert geo.dist(resolved, p) == pytest.approx(0.3, abs=0.01)
        assert resolved[0] < 4.0

    def test_trapped_camera_holds_previous(self):
        occ = np.ones((8, 8, 8), dtype=bool)
        grid = OccupancyGrid(origin=(0, 0, 0), cell_size=0.5, dims=(8, 8, 8), occupancy=occ)
        prev = (-1.0, -1.0, -1.0)
        assert resolve_position(grid, (2.0, 2.0, 2.0), prev) == prev

    def test_sliding_track_never_penetrates(self):
        # steadycam drags the camera toward a wall; every frame must stay out
        grid_scene_wall = character("hero", line_track((2.0, 1.0, 2.0), (2.0, 1.0, 14.0), 0.0, 4.0))
        from helpers import box_object

        wall = box_object("barrier", (3.0, 2.0, 8.0), (0.25, 2.0, 4.0))
        scene = SceneDescription(objects=(grid_scene_wall, wall))
        timeline = Timeline(
            duration=4.0,
            markers=(ShotMarker(id="m1", time=0.0, targets=("hero",)),),
            proxies=(ProxyVolume((0, 0, 0), (8, 4, 16), 0.25),),
        )
        from directorscut.proxy import proxy_union, voxelize
        from directorscut.scene import subject_point

        grid = voxelize(scene, proxy_union(timeline.proxies), 0.0, "m1")
        focus = subject_point(scene, ("hero",), 0.0)
        # camera starts wall-side so the follow path grazes the barrier
        plan = make_plan(
            "m1", 0.0, look_at((3.5, 2.0, 0.5), focus), focus,
            {Category.TRACKING: Technique.STEADYCAM_TRACKING},
        )
        storyboard = manual_storyboard([plan])
        out = execute(storyboard, scene, timeline, grids={"m1": grid},
                      config=PlaybackConfig(fps=30))
        for f in out.frames:
            assert not is_occupied(grid, f.position)


class TestExport:
    def test_csv_header_and_rows(self):
        scene, timeline, storyboard = single_marker_setup(static_track((0, 0.9, 0)), duration=1.0)
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=30))
        text = export_track(out, "csv").decode()
        lines = text.strip().split("\n")
        assert lines[0] == "wall_time,scene_time,px,py,pz,dir_x,dir_y,dir_z,fov,time_scale"
        assert len(lines) == 32  # header + 31 frames
        assert all(len(line.split(",")) == 10 for line in lines[1:])

    def test_json_round_trip(self):
        scene, timeline, storyboard = single_marker_setup(
            line_track((0, 0.9, 0), (2, 0.9, 0), 0.0, 2.0), duration=2.0,
            techniques={Category.TRACKING: Technique.STEADYCAM_TRACKING},
        )
        out = execute(storyboard, scene, timeline, config=PlaybackConfig(fps=24))
        data = export_track(out, "json")
        back = parse_track_json(data)
        assert back.fps == out.fps
        assert len(back.frames) == len(out.frames)
        assert export_track(back, "json") == data  # parse/format idempotent

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            export_track(CameraTrack(frames=(), fps=30.0), "yaml")
