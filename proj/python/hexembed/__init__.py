"""Road-network embeddings over hexagonal microregions."""

from ._core import (
    DataError,
    StaleError,
    UsageError,
    adjusted_rand_index,
    cell_boundary,
    cell_of_point,
    cells_of_segment,
    encode,
    encode_tags,
    mse_loss,
    normalize_tag,
    parse_road_collection,
    pca_project,
    rgb_encode,
    run_stage,
    schema_columns,
    schema_width,
    stages,
    train_autoencoder,
    tsne,
    ward_linkage,
    write_gridville,
)

__all__ = [
    "DataError",
    "StaleError",
    "UsageError",
    "adjusted_rand_index",
    "cell_boundary",
    "cell_of_point",
    "cells_of_segment",
    "encode",
    "encode_tags",
    "mse_loss",
    "normalize_tag",
    "parse_road_collection",
    "pca_project",
    "rgb_encode",
    "run_stage",
    "schema_columns",
    "schema_width",
    "stages",
    "train_autoencoder",
    "tsne",
    "ward_linkage",
    "write_gridville",
]
