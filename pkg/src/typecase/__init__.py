"""Workbench engine for typographic forensics of movable-type books."""

from .model import (BBox, Block, CharacterKey, Dataset, DatasetMeta,
                    DatasetSummary, IndexedDataset, LineLayout, Segment,
                    Selection, Spread, build_indexes, expand_selection,
                    summary)
from .dataio import (ValidationReport, export_dataset, parse_dataset,
                     semantically_equal, validate)

__all__ = [
    "BBox", "Block", "CharacterKey", "Dataset", "DatasetMeta",
    "DatasetSummary", "IndexedDataset", "LineLayout", "Segment", "Selection",
    "Spread", "build_indexes", "expand_selection", "summary",
    "ValidationReport", "export_dataset", "parse_dataset",
    "semantically_equal", "validate",
]

__version__ = "0.1.0"
