"""Scene generation, validation, serialization, and mesh export."""

import json
import struct

import numpy as np
import pytest

from seekbench import semantics as sem
from seekbench.worldgen import (
    GenParams, Obstacle, Room, SceneFormatError, WorldMap, canonical_scene,
    collision_soup, export_mesh, generate_scene, scene_from_json,
    scene_to_json, sensor_soup, validate_scene,
)

from conftest import make_world, rect


class TestGeneration:
    def test_deterministic(self):
        a = generate_scene(7)
        b = generate_scene(7)
        assert scene_to_json(a) == scene_to_json(b)

    def test_distinct_seeds_differ(self):
        assert scene_to_json(generate_scene(1)) != scene_to_json(generate_scene(2))

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_canonical_scenes_validate_clean(self, seed):
        assert validate_scene(canonical_scene(seed)) == []

    def test_room_count_in_params_range(self):
        params = GenParams()
        for seed in (1, 2, 3, 4, 5):
            world = generate_scene(seed, params)
            assert params.min_rooms <= len(world.rooms) <= params.max_rooms

    def test_has_offices_and_spawns(self, scene4):
        assert any(r.type == "office" for r in scene4.rooms)
        assert len(scene4.spawn_points) >= 1

    def test_bounds_match_params(self, scene4):
        x0, y0, x1, y1 = scene4.bounds
        assert (x1 - x0, y1 - y0) == (18.0, 14.0)


class TestValidation:
    def test_walled_off_room_flagged(self):
        # a slab inside the right room seals it off completely
        slab = Obstacle(polygon=rect(5.0, 0.0, 5.2, 10.0), class_id=sem.WALL,
                        instance_id=1, height=2.5)
        world = make_world(
            bounds=(0.0, 0.0, 10.0, 10.0),
            rooms=(Room(rect(0.0, 0.0, 5.0, 10.0), "office"),
                   Room(rect(5.0, 0.0, 10.0, 10.0), "office")),
            obstacles=(slab,),
            spawns=((1.0, 1.0),),
        )
        violations = validate_scene(world)
        assert any("connectivity" in v and "room 1" in v for v in violations)

    def test_overlapping_rooms_flagged(self):
        world = make_world(
            rooms=(Room(rect(0.0, 0.0, 6.0, 10.0), "office"),
                   Room(rect(4.0, 0.0, 10.0, 10.0), "office")),
        )
        violations = validate_scene(world)
        assert any("overlap" in v for v in violations)

    def test_spawn_in_wall_flagged(self):
        slab = Obstacle(polygon=rect(4.0, 4.0, 6.0, 6.0), class_id=sem.WALL,
                        instance_id=1, height=2.5)
        world = make_world(
            rooms=(Room(rect(0.0, 0.0, 10.0, 10.0), "office"),),
            obstacles=(slab,),
            spawns=((5.0, 5.0),),
        )
        violations = validate_scene(world)
        assert any(v.startswith("spawn 0") for v in violations)

    def test_bad_obstacle_flagged(self):
        bad = Obstacle(polygon=rect(2.0, 2.0, 3.0, 3.0), class_id=sem.FLOOR,
                       instance_id=0, height=-1.0)
        world = make_world(
            rooms=(Room(rect(0.0, 0.0, 10.0, 10.0), "office"),),
            obstacles=(bad,), spawns=((8.0, 8.0),),
        )
        violations = validate_scene(world)
        assert any("height" in v for v in violations)
        assert any("not an obstacle class" in v for v in violations)
        assert any("instance id" in v for v in violations)


class TestSerialization:
    def test_round_trip_equality(self, scene4):
        again = scene_from_json(scene_to_json(scene4))
        assert again == scene4
        assert scene_to_json(again) == scene_to_json(scene4)

    def test_numbers_survive_round_trip_exactly(self, scene4):
        again = scene_from_json(scene_to_json(scene4))
        for a, b in zip(again.spawn_points, scene4.spawn_points):
            assert a == b

    def test_out_of_range_class_rejected(self, scene4):
        payload = json.loads(scene_to_json(scene4))
        payload["obstacles"][0]["class"] = 11
        with pytest.raises(SceneFormatError, match=r"obstacles\[0\]"):
            scene_from_json(json.dumps(payload))

    def test_missing_spawn_points_rejected(self, scene4):
        payload = json.loads(scene_to_json(scene4))
        del payload["spawn_points"]
        with pytest.raises(SceneFormatError, match="spawn_points"):
            scene_from_json(json.dumps(payload))

    def test_not_json_rejected(self):
        with pytest.raises(SceneFormatError, match="not valid JSON"):
            scene_from_json("{nope")


PLY_VERTEX = struct.Struct("<fff3BBH")


def parse_ply(data: bytes):
    head, _, body = data.partition(b"end_header\n")
    header = head.decode("ascii")
    n_verts = int(header.split("element vertex ")[1].split("\n")[0])
    n_faces = int(header.split("element face ")[1].split("\n")[0])
    verts = []
    off = 0
    for _ in range(n_verts):
        verts.append(PLY_VERTEX.unpack_from(body, off))
        off += PLY_VERTEX.size
    faces = []
    for _ in range(n_faces):
        (cnt,) = struct.unpack_from("<B", body, off)
        off += 1
        faces.append(struct.unpack_from(f"<{cnt}i", body, off))
        off += 4 * cnt
    assert off == len(body), "trailing bytes in PLY body"
    return header, verts, faces


class TestMeshExport:
    def test_empty_world_floor_and_ceiling_only(self):
        world = make_world(rooms=(), obstacles=(), spawns=((5.0, 5.0),))
        _, verts, faces = parse_ply(export_mesh(world, "ply"))
        assert len(verts) == 8
        assert len(faces) == 2
        classes = {v[6] for v in verts}
        assert classes == {sem.FLOOR, sem.CEILING}

    def test_single_box_vertex_count_and_classes(self):
        box = Obstacle(polygon=rect(2.0, 2.0, 3.0, 3.0), class_id=sem.WALL,
                       instance_id=1, height=2.0)
        world = make_world(obstacles=(box,))
        _, verts, faces = parse_ply(export_mesh(world, "ply"))
        # 8 floor/ceiling corners + 8 extruded box corners
        assert len(verts) == 16
        wall_verts = [v for v in verts if v[6] == sem.WALL]
        assert len(wall_verts) == 8
        zs = sorted({v[2] for v in wall_verts})
        assert zs == [0.0, 2.0]
        for v in wall_verts:
            assert tuple(v[3:6]) == tuple(int(c) for c in sem.PALETTE[sem.WALL])
            assert v[7] == 1

    def test_vertex_count_formula(self, scene4):
        _, verts, _faces = parse_ply(export_mesh(scene4, "ply"))
        assert len(verts) == 8 * len(scene4.obstacles) + 8

    def test_floor_area_matches_bounds(self, scene4):
        _, verts, faces = parse_ply(export_mesh(scene4, "ply"))
        x0, y0, x1, y1 = scene4.bounds
        floor_faces = [f for f in faces
                       if all(verts[i][6] == sem.FLOOR for i in f)]
        area = 0.0
        for f in floor_faces:
            pts = [(verts[i][0], verts[i][1]) for i in f]
            s = 0.0
            for k in range(len(pts)):
                ax, ay = pts[k]
                bx, by = pts[(k + 1) % len(pts)]
                s += ax * by - bx * ay
            area += abs(s) / 2.0
        assert area == pytest.approx((x1 - x0) * (y1 - y0), abs=1e-6)

    def test_monitor_base_sits_on_table_height(self, scene4):
        monitors = [o for o in scene4.obstacles if o.class_id == sem.MONITOR]
        if not monitors:
            pytest.skip("scene has no monitors")
        _, verts, _ = parse_ply(export_mesh(scene4, "ply"))
        zs = sorted({round(v[2], 6) for v in verts if v[6] == sem.MONITOR})
        assert zs[0] == pytest.approx(sem.CLASS_BASES[sem.MONITOR])

    def test_obj_export(self, scene4):
        text = export_mesh(scene4, "obj").decode("ascii")
        assert text.startswith("#")
        assert "g floor" in text and "g ceiling" in text
        assert "usemtl wall" in text
        n_verts = sum(1 for line in text.splitlines() if line.startswith("v "))
        assert n_verts == 8 * len(scene4.obstacles) + 8

    def test_unsupported_format(self, scene4):
        with pytest.raises(ValueError, match="unsupported"):
            export_mesh(scene4, "stl")


class TestSoups:
    def test_collision_soup_includes_bounds(self):
        world = make_world(obstacles=())
        soup = collision_soup(world)
        assert len(soup) == 4  # just the boundary ring

    def test_collision_soup_excludes_elevated(self, scene4):
        soup = collision_soup(scene4)
        # monitors sit on tables and never block the agent disc
        assert sem.MONITOR not in set(soup.class_ids.tolist())

    def test_sensor_soup_has_bands(self, scene4):
        soup = sensor_soup(scene4)
        assert len(soup) >= len(scene4.obstacles)
        assert np.all(soup.band_hi > soup.band_lo)
        mon = soup.class_ids == sem.MONITOR
        if mon.any():
            assert np.all(soup.band_lo[mon] == sem.CLASS_BASES[sem.MONITOR])
