import math

import numpy as np
import pytest

from desknav.errors import DomainError, MapFormatError, ValidationError
from desknav.kinematics import Pose2D
from desknav.mapping import (
    FREE, LETHAL, NO_INFORMATION, OCCUPIED, PIXEL_UNKNOWN, UNKNOWN, MapMetadata,
    decode_pixels, grid_from_classes, integrate_scan, load_map, new_grid, read_pgm,
    save_map, to_costmap,
)
from desknav.world import LaserScan, ScanParams


def _scan(ranges, hits, count=None, amin=-math.pi, amax=None):
    ranges = np.asarray(ranges, dtype=float)
    n = count or len(ranges)
    amax = amax if amax is not None else amin + 2 * math.pi * (n - 1) / n
    params = ScanParams(beam_count=n, angle_min=amin, angle_max=amax, max_range=3.5)
    return LaserScan(ranges, np.asarray(hits, dtype=bool), params)


def _single_beam(r, hit=True):
    # two coincident beams; a cell is updated once per scan regardless
    params = ScanParams(beam_count=2, angle_min=0.0, angle_max=1e-12, max_range=3.5)
    return LaserScan(np.array([r, r]), np.array([hit, hit]), params)


def test_new_grid_prior():
    g = new_grid(10, 10, 0.05)
    assert g.log_odds.size == 100
    assert np.all(g.probabilities() == 0.5)
    assert np.all(g.classify() == UNKNOWN)


@pytest.mark.parametrize("w,h,res", [(0, 10, 0.05), (10, -1, 0.05), (5, 5, 0.0)])
def test_new_grid_rejects_bad_geometry(w, h, res):
    with pytest.raises(ValidationError):
        new_grid(w, h, res)


def test_cell_center_convention():
    g = new_grid(10, 10, 0.05, Pose2D(-1.0, 2.0, 0.0))
    assert g.cell_center(0, 0) == pytest.approx((-0.975, 2.025))


def test_no_hit_scan_only_decrements():
    g = new_grid(80, 80, 0.05, Pose2D(-2, -2, 0))
    scan = _scan(np.full(36, 1.5), np.zeros(36))
    out = integrate_scan(g, Pose2D(0, 0, 0), scan)
    assert out.log_odds.max() == 0.0
    assert out.log_odds.min() == pytest.approx(-0.4)


def test_two_hits_on_one_cell():
    g = new_grid(40, 20, 0.05, Pose2D(-0.5, -0.5, 0))
    scan = _single_beam(1.0)
    out = integrate_scan(integrate_scan(g, Pose2D(0, 0, 0), scan), Pose2D(0, 0, 0), scan)
    r, c = out.cell_of(1.0 + 1e-4, 0.0)
    assert out.log_odds[r, c] == pytest.approx(1.7)
    # logistic oracle written out by hand
    assert out.probabilities()[r, c] == pytest.approx(1.0 / (1.0 + math.exp(-1.7)), abs=1e-12)
    assert out.probabilities()[r, c] == pytest.approx(0.8455, abs=1e-4)


def test_clamp_is_a_fixed_point():
    g = new_grid(80, 80, 0.05, Pose2D(-2, -2, 0))
    scan = _scan(np.linspace(0.5, 1.5, 36), np.ones(36))
    pose = Pose2D(0.01, 0.02, 0.0)
    for _ in range(20):
        g = integrate_scan(g, pose, scan)
    touched = g.log_odds != 0
    assert np.all(np.isin(g.log_odds[touched], [-4.0, 4.0]))
    again = integrate_scan(g, pose, scan)
    assert np.array_equal(again.log_odds, g.log_odds)


def test_integration_order_commutes():
    g = new_grid(80, 80, 0.05, Pose2D(-2, -2, 0))
    a = _scan(np.linspace(0.6, 1.2, 36), np.ones(36))
    b = _scan(np.linspace(1.3, 0.7, 36), np.r_[np.ones(18), np.zeros(18)])
    pa, pb = Pose2D(0.0, 0.0, 0.1), Pose2D(0.3, -0.2, -0.4)
    ab = integrate_scan(integrate_scan(g, pa, a), pb, b)
    ba = integrate_scan(integrate_scan(g, pb, b), pa, a)
    assert np.abs(ab.log_odds).max() < 4.0
    assert np.allclose(ab.log_odds, ba.log_odds, atol=1e-12, rtol=0)


def test_cells_outside_beams_keep_prior():
    g = new_grid(60, 60, 0.05, Pose2D(-1.5, -1.5, 0))
    out = integrate_scan(g, Pose2D(0, 0, 0), _single_beam(1.0))
    changed = np.argwhere(out.log_odds != 0)
    # every changed cell lies on the +x axis row
    row = out.cell_of(0.0, 0.0)[0]
    assert set(changed[:, 0]) == {row}
    cols = changed[:, 1]
    assert cols.min() > out.cell_of(0.0, 0.0)[1] and cols.max() == out.cell_of(1.0001, 0.0)[1]


def test_pose_outside_grid():
    g = new_grid(10, 10, 0.1)
    with pytest.raises(DomainError):
        integrate_scan(g, Pose2D(5, 5, 0), _single_beam(1.0))


def _classes(shape=(7, 9), seed=0):
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([FREE, OCCUPIED, UNKNOWN], dtype=np.int8), size=shape)


def test_save_load_round_trip(tmp_path):
    cls = _classes()
    g = grid_from_classes(cls, 0.05, Pose2D(-1.25, 0.5, 0.1))
    save_map(g, tmp_path, "m")
    loaded, meta = load_map(tmp_path, "m")
    assert np.array_equal(loaded.classify(), cls)
    assert meta.resolution == 0.05
    assert meta.origin == (-1.25, 0.5, 0.1)
    assert loaded.origin == g.origin


def test_saved_bytes_are_deterministic(tmp_path):
    g = grid_from_classes(_classes(seed=4), 0.1, Pose2D())
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        save_map(g, tmp_path / sub, "m")
    for ext in ("pgm", "yaml"):
        assert (tmp_path / "a" / f"m.{ext}").read_bytes() == (tmp_path / "b" / f"m.{ext}").read_bytes()


def test_yaml_key_order(tmp_path):
    save_map(new_grid(3, 3, 0.05), tmp_path, "m")
    keys = [line.split(":")[0] for line in (tmp_path / "m.yaml").read_text().splitlines()]
    assert keys == ["image", "resolution", "origin", "negate", "occupied_thresh", "free_thresh"]


def test_unknown_grid_encodes_205(tmp_path):
    save_map(new_grid(4, 3, 0.05), tmp_path, "m")
    px = read_pgm(tmp_path / "m.pgm")
    assert px.shape == (3, 4)
    assert np.all(px == PIXEL_UNKNOWN)


def test_image_row_zero_is_map_top(tmp_path):
    cls = np.full((3, 2), FREE, dtype=np.int8)
    cls[2, 0] = OCCUPIED  # top row in world terms
    save_map(grid_from_classes(cls, 0.1, Pose2D()), tmp_path, "m")
    px = read_pgm(tmp_path / "m.pgm")
    assert px[0, 0] == 0 and px[2, 0] == 254


def test_pixel_254_is_free_and_0_is_occupied():
    meta = MapMetadata("m.pgm", 0.05, (0, 0, 0))
    # occupancy = 1 - pixel / 255
    assert 1 - 254 / 255 < meta.free_thresh
    out = decode_pixels(np.array([[254, 0, 205]], dtype=np.uint8), meta)
    assert out[0].tolist() == [FREE, OCCUPIED, UNKNOWN]


def test_negate_flips_semantics():
    meta = MapMetadata("m.pgm", 0.05, (0, 0, 0), negate=1)
    out = decode_pixels(np.array([[254, 0]], dtype=np.uint8), meta)
    assert out[0].tolist() == [OCCUPIED, FREE]


def test_threshold_violation(tmp_path):
    save_map(new_grid(3, 3, 0.05), tmp_path, "m")
    text = (tmp_path / "m.yaml").read_text().replace("free_thresh: 0.196", "free_thresh: 0.9")
    (tmp_path / "m.yaml").write_text(text)
    with pytest.raises(MapFormatError):
        load_map(tmp_path, "m")


def test_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_map(tmp_path, "nothing")
    save_map(new_grid(3, 3, 0.05), tmp_path, "m")
    (tmp_path / "m.pgm").unlink()
    with pytest.raises(FileNotFoundError):
        load_map(tmp_path, "m")


def test_malformed_pgm_header(tmp_path):
    save_map(new_grid(3, 3, 0.05), tmp_path, "m")
    (tmp_path / "m.pgm").write_bytes(b"P2\n3 3\n255\n" + bytes(9))
    with pytest.raises(MapFormatError):
        load_map(tmp_path, "m")


def test_pgm_comments_are_skipped(tmp_path):
    save_map(new_grid(2, 2, 0.05), tmp_path, "m")
    (tmp_path / "m.pgm").write_bytes(b"P5\n# made by hand\n2 2\n255\n" + bytes([0, 254, 205, 0]))
    grid, _ = load_map(tmp_path, "m")
    assert grid.classify()[::-1].tolist() == [[OCCUPIED, FREE], [UNKNOWN, OCCUPIED]]


def test_costmap_values():
    cls = np.full((4, 4), FREE, dtype=np.int8)
    assert np.all(to_costmap(grid_from_classes(cls, 0.1, Pose2D())).cost == 0)
    cls[1, 2] = OCCUPIED
    cls[3, 3] = UNKNOWN
    cm = to_costmap(grid_from_classes(cls, 0.1, Pose2D(1, 2, 0)))
    assert cm.cost[1, 2] == LETHAL and cm.cost[3, 3] == NO_INFORMATION
    assert np.count_nonzero(cm.cost == LETHAL) == 1
    assert cm.is_blocked(3, 3) and cm.is_blocked(-1, 0)
    assert cm.origin == Pose2D(1, 2, 0) and cm.resolution == 0.1
