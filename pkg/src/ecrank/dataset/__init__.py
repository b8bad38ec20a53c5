"""Datasets: generation, file formats, input features and splits."""

from .features import ApFeatures, TabularFeatures, build_feature_matrix, conductor_feature, sweep_row
from .generate import (
    CubicMap,
    GenConfig,
    PlaneCubic,
    cubic_to_weierstrass,
    gen_pencil_cubic,
    gen_random_weierstrass,
    generate_custom_dataset,
)
from .records import CurveRecord, ingest_csv, read_aps, write_aps, write_curves_csv
from .split import (
    CUSTOM_HIGH_RANK,
    LMFDB_HIGH_RANK,
    SplitSpec,
    class_weights,
    merge_binary_labels,
    split_dataset,
    split_indices,
)
