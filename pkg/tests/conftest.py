import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from typecase.model import (BBox, CharacterKey, Dataset, DatasetMeta,
                            LineLayout, Segment, Spread, build_indexes)


def make_segment(sid, spread, line, y, key, block, x=10, w=100, h=100):
    return Segment(sid, spread, line, BBox(x, y, w, h), key, block)


@pytest.fixture
def toy_dataset():
    """One spread, two lines, five segments over three blocks of two
    characters."""
    ka = CharacterKey("か")
    no = CharacterKey("の", "乃")
    meta = DatasetMeta(title="toy", unit_height_px=100.0, segment_width_px=100)
    spread = Spread(0, 400, 600, (LineLayout(0, 10), LineLayout(1, 150)))
    segments = (
        make_segment(0, 0, 0, 10, ka, 0),
        make_segment(1, 0, 0, 110, no, 1, h=200),
        make_segment(2, 0, 1, 10, ka, 0, x=150),
        make_segment(3, 0, 1, 110, ka, 2, x=150),
        make_segment(4, 0, 1, 210, no, 1, x=150, h=200),
    )
    return Dataset.assemble(meta, (spread,), segments)


@pytest.fixture
def toy_indexed(toy_dataset):
    return build_indexes(toy_dataset)


@pytest.fixture
def empty_dataset():
    return Dataset.assemble(DatasetMeta(unit_height_px=100.0,
                                        segment_width_px=100), (), ())
