import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpa.errors import DomainError
from cpa.partition import (Box, RectilinearPartition, UniformPartition,
                           clamp_points, partition_from_spec)

UNIT = Box((0.0,), (1.0,))
BREAKS_EX = [0.0, 0.183, 0.31, 0.4, 0.7, 1.0]


def test_encode_five_cells():
    part = UniformPartition(UNIT, (5,))
    assert part.encode([0.183]) == 0
    assert part.encode([0.2]) == 1
    assert part.encode([1.0]) == 4  # top cell closed


def test_encode_2d_row_major():
    part = UniformPartition(Box((0.0, 0.0), (1.0, 1.0)), (5, 5))
    s = part.encode([0.95, 0.95])
    assert part.multi_index(s) == (4, 4)
    assert s == 24


def test_encode_breakpoint_partition():
    part = RectilinearPartition([BREAKS_EX])
    assert part.encode([0.31]) == 2
    assert part.encode([0.0]) == 0
    assert part.encode([1.0]) == 4


def test_encode_out_of_domain():
    part = UniformPartition(UNIT, (5,))
    with pytest.raises(DomainError) as err:
        part.encode([1.2])
    assert err.value.dim == 0
    assert err.value.value == pytest.approx(1.2)


def test_cell_bounds_examples():
    part = UniformPartition(UNIT, (5,))
    cell = part.cell_bounds(1)
    assert cell.lower == (0.2,) and cell.upper == pytest.approx((0.4,))

    part2 = UniformPartition(Box((0.0, 0.0), (1.0, 1.0)), (2, 2))
    cell3 = part2.cell_bounds(3)
    assert cell3.lower == (0.5, 0.5) and cell3.upper == (1.0, 1.0)


def test_cell_bounds_roundtrip_5x15():
    part = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, 15))
    for s in range(part.size):
        assert part.encode(part.cell_bounds(s).midpoint) == s


def test_sample_cell_containment(rng):
    part = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, 5))
    for s in (0, 7, 24):
        pts = part.sample_cell(s, rng, 100)
        assert pts.shape == (100, 2)
        assert np.all(part.encode_many(pts) == s)
    single = part.sample_cell(3, rng, 1)
    assert single.shape == (1, 2)


def test_sample_cell_mean(rng):
    part = UniformPartition(UNIT, (5,))
    pts = part.sample_cell(0, rng, 10_000)
    sigma = (0.2 / np.sqrt(12.0)) / 100.0
    assert abs(pts.mean() - 0.1) < 3 * sigma


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
def test_point_in_its_cell(point):
    part = UniformPartition(Box((0.0, 0.0), (1.0, 1.0)), (7, 3))
    cell = part.cell_bounds(part.encode(point))
    assert cell.contains(point)


def test_encode_surjective_on_dense_grid():
    part = RectilinearPartition([BREAKS_EX, [0.0, 0.5, 1.0]])
    grid = np.stack(np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 1, 101)),
                    axis=-1).reshape(-1, 2)
    hit = set(part.encode_many(grid).tolist())
    assert hit == set(range(part.size))


def test_cell_volumes_cover_domain():
    part = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, 15))
    total = sum(part.cell_volume(s) for s in range(part.size))
    assert abs(total - part.box.volume) / part.box.volume < 1e-12

    part2 = RectilinearPartition([BREAKS_EX])
    total2 = sum(part2.cell_volume(s) for s in range(part2.size))
    assert abs(total2 - 1.0) < 1e-12


def test_clamp_points():
    box = Box((0.0, 0.0), (1.0, 100.0))
    pts = np.array([[0.5, 50.0], [1.2, -3.0]])
    clamped, n = clamp_points(pts, box)
    assert n == 1
    assert clamped[1].tolist() == [1.0, 0.0]
    # clamped points encode into the closed top cell
    part = UniformPartition(box, (5, 5))
    assert part.encode(clamped[1]) == part.flat_index((4, 0))


def test_spec_roundtrip():
    part = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, 15))
    again = partition_from_spec(part.spec_dict())
    assert again == part
    part2 = RectilinearPartition([BREAKS_EX])
    assert partition_from_spec(part2.spec_dict()) == part2


def test_invalid_construction():
    with pytest.raises(ValueError):
        Box((0.0,), (0.0,))
    with pytest.raises(ValueError):
        UniformPartition(UNIT, (0,))
    with pytest.raises(ValueError):
        RectilinearPartition([[0.0, 0.0, 1.0]])
