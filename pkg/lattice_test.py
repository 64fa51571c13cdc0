# Tests for lattice geometry, regions, configurations and light cones

import numpy as np
import pytest

from errors import CoverageError
from lattice import (
    Configuration,
    FullState,
    Geometry,
    Region,
    axis_extent,
    light_cone_valid,
    moore_neighborhood,
    restrict,
    translate,
)

RING_8 = Geometry(sides=(8,), alphabet=2)
RING_16 = Geometry(sides=(16,), alphabet=2)
GRID_8 = Geometry(sides=(8, 8), alphabet=2)


def test_geometry_rejects_bad_values():
    with pytest.raises(ValueError):
        Geometry(sides=(8,), alphabet=1)
    with pytest.raises(ValueError):
        Geometry(sides=(), alphabet=2)
    with pytest.raises(ValueError):
        Geometry(sides=(0, 4), alphabet=2)


def test_region_wraps_and_sorts():
    region = Region.of(RING_8, [-1, 3, 0])
    assert region.cells == ((0,), (3,), (7,))
    assert region.to_text() == "0;3;7"


def test_region_rejects_duplicates_after_wrap():
    with pytest.raises(ValueError):
        Region.of(RING_8, [1, 9])


def test_moore_neighborhood_wraps():
    assert moore_neighborhood(Region.of(RING_8, [0]), 1).cells == ((0,), (1,), (7,))


def test_moore_neighborhood_radius_zero_is_identity():
    region = Region.of(GRID_8, [(1, 2), (5, 5)])
    assert moore_neighborhood(region, 0) == region


def test_moore_neighborhood_2d_block():
    block = moore_neighborhood(Region.of(GRID_8, [(0, 0)]), 1)
    assert len(block) == 9
    assert (7, 7) in block and (1, 1) in block and (0, 7) in block


def test_moore_neighborhood_is_monotone_and_bounded():
    region = Region.of(GRID_8, [(0, 0), (3, 4)])
    smaller = moore_neighborhood(region, 1)
    larger = moore_neighborhood(region, 2)
    assert smaller.issubset(larger)
    assert len(larger) <= len(region) * 5 ** 2


def test_restrict_full_state():
    cells = np.zeros(8, dtype=np.uint8)
    cells[3] = 1
    state = FullState(geometry=RING_8, cells=cells)
    assert restrict(state, Region.of(RING_8, [3])).symbol_text() == "1"


def test_restrict_to_everything_is_identity():
    state = FullState.from_text(RING_8, "10110010")
    full = restrict(state, Region.full(RING_8))
    assert FullState.from_configuration(full) == state


def test_restrict_configuration():
    config = Configuration.of(Region.of(RING_8, [0, 1, 2]), "101")
    assert restrict(config, Region.of(RING_8, [0, 2])).symbol_text() == "11"


def test_restrict_outside_domain_fails():
    config = Configuration.of(Region.of(RING_8, [0, 1]), "10")
    with pytest.raises(CoverageError):
        restrict(config, Region.of(RING_8, [5]))


def test_restrict_is_transitive():
    state = FullState.from_text(RING_8, "01101001")
    outer = Region.of(RING_8, [1, 2, 3, 4])
    inner = Region.of(RING_8, [2, 4])
    assert restrict(restrict(state, outer), inner) == restrict(state, inner)


def test_light_cone_examples():
    pair = Region.of(RING_16, [0, 2])
    assert light_cone_valid(RING_16, pair, 5)
    assert not light_cone_valid(RING_16, pair, 7)
    assert light_cone_valid(RING_8, Region.of(RING_8, [0]), 3)
    assert not light_cone_valid(RING_8, Region.of(RING_8, [0]), 4)


def test_axis_extent_uses_shortest_arc():
    assert axis_extent([0, 15], 16) == 1
    assert axis_extent([0, 2], 16) == 2
    assert axis_extent([3], 16) == 0


def test_text_forms_round_trip():
    region = Region.of(GRID_8, [(0, 1), (-1, 2)])
    assert Region.parse(GRID_8, region.to_text()) == region

    config = Configuration.of(region, "10")
    assert Configuration.parse(GRID_8, config.to_text()) == config

    state = FullState.from_text(RING_8, "00110101")
    assert FullState.from_text(RING_8, state.to_text()) == state


def test_configuration_codes_are_lexicographic():
    region = Region.of(RING_8, [0, 1, 2])
    assert Configuration.of(region, "011").code() == 3
    assert Configuration.from_code(region, 6).symbol_text() == "110"


def test_configuration_rejects_bad_symbols():
    region = Region.of(RING_8, [0, 1])
    with pytest.raises(ValueError):
        Configuration.of(region, "12")
    with pytest.raises(ValueError):
        Configuration.of(region, "1")


def test_translate_configuration_and_state():
    config = Configuration.of(Region.of(RING_8, [0, 1]), "10")
    moved = translate(config, -3)
    assert moved.as_dict() == {(5,): 1, (6,): 0}

    state = FullState.from_text(RING_8, "10000000")
    assert translate(state, 2).to_text() == "00100000"


def test_full_state_is_immutable_and_hashable():
    state = FullState.from_text(RING_8, "10000001")
    with pytest.raises(ValueError):
        state.cells[0] = 0
    assert hash(state) == hash(FullState.from_text(RING_8, "10000001"))
    assert state.digest() != FullState.zeros(RING_8).digest()
