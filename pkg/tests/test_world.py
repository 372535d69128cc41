import numpy as np
import pytest

from saginmec.config import default_config
from saginmec.rng import substream
from saginmec.world import init_world, sample_tasks


def test_init_world_is_bit_identical_per_seed():
    cfg = default_config()
    a = init_world(cfg, 42)
    b = init_world(cfg, 42)
    for name in ("ud_pos", "ud_vel", "ud_mean_vel", "ud_tx_power_w",
                 "uav_pos", "sat_pos", "ud_energy_j", "uav_energy_j",
                 "task_bits", "task_cycles_per_bit", "task_deadline_s"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name


def test_different_seed_moves_everyone():
    cfg = default_config()
    a = init_world(cfg, 1)
    b = init_world(cfg, 2)
    assert not np.array_equal(a.ud_pos, b.ud_pos)
    assert not np.array_equal(a.uav_pos, b.uav_pos)


def test_uav_spawn_boxes_respected():
    cfg = default_config()
    boxes = cfg.scenario.uav_spawn_boxes_m
    for seed in range(20):
        w = init_world(cfg, seed)
        for u, (x0, x1, y0, y1) in enumerate(boxes):
            assert x0 <= w.uav_pos[u, 0] <= x1
            assert y0 <= w.uav_pos[u, 1] <= y1


def test_extra_uavs_spawn_inside_area():
    cfg = default_config()
    cfg.scenario.num_uavs = 5
    w = init_world(cfg, 3)
    assert np.all(w.uav_pos >= 0)
    assert np.all(w.uav_pos[:, 0] <= cfg.scenario.area_x_max_m)
    assert np.all(w.uav_pos[:, 1] <= cfg.scenario.area_y_max_m)


def test_energies_start_at_budgets():
    cfg = default_config()
    w = init_world(cfg, 0)
    assert np.all(w.uav_energy_j == cfg.energy.uav_budget_j)
    assert np.all(w.ud_energy_j == pytest.approx(1080.0))


def test_zero_uds_rejected():
    cfg = default_config()
    cfg.scenario.num_uds = 0
    with pytest.raises(ValueError, match="num_uds"):
        init_world(cfg, 0)


def test_task_size_mean_tracks_range_centre():
    # law-of-large-numbers check against the uniform mean (1+5)/2 Mb
    cfg = default_config()
    bits, cpb, deadline = sample_tasks(
        cfg, substream(5, "task-size"), substream(5, "task-density"),
        substream(5, "task-deadline"), 1000)
    assert abs(bits.mean() - 3.0e6) / 3.0e6 < 0.05
    # density arrives in cycles/bit: table range [1000, 1500] cycles/byte
    assert np.all(cpb >= 125.0) and np.all(cpb <= 187.5)
    assert np.all((deadline >= 1.0) & (deadline <= 5.0))


def test_task_fields_draw_from_independent_streams():
    # widening the deadline range must not move the size draws
    cfg = default_config()
    a = sample_tasks(cfg, substream(9, "task-size"),
                     substream(9, "task-density"),
                     substream(9, "task-deadline"), 50)
    cfg.tasks.deadline_range_s = [1.0, 50.0]
    b = sample_tasks(cfg, substream(9, "task-size"),
                     substream(9, "task-density"),
                     substream(9, "task-deadline"), 50)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])
    assert not np.array_equal(a[2], b[2])


def test_default_single_sat_sits_over_centre():
    cfg = default_config()
    w = init_world(cfg, 0)
    assert w.sat_pos.shape == (1, 2)
    assert np.allclose(w.sat_pos[0], [500.0, 500.0])
