"""Feature extraction: catalog, categorical encoders, windows, and the matrix."""

from .catalog import CATALOG, FeatureCatalog, FeatureEntry, FeatureGroup, catalog_fingerprint
from .encoders import (
    CategoricalEncoders,
    TypeEncoder,
    VersionEncoder,
    VersionParseError,
    encode_ide_version,
    parse_version,
)
from .matrix import (
    FeatureMatrix,
    FeatureMismatchError,
    FeatureVector,
    assemble_matrix,
    build_developer_features,
    build_in_situ_features,
    build_project_features,
    fit_encoders,
    read_encoders,
    read_matrix_csv,
    write_encoders,
    write_matrix_csv,
)
from .windows import DEFAULT_WINDOW_DAYS, WindowEngine

__all__ = [
    "CATALOG",
    "CategoricalEncoders",
    "DEFAULT_WINDOW_DAYS",
    "FeatureCatalog",
    "FeatureEntry",
    "FeatureGroup",
    "FeatureMatrix",
    "FeatureMismatchError",
    "FeatureVector",
    "TypeEncoder",
    "VersionEncoder",
    "VersionParseError",
    "WindowEngine",
    "assemble_matrix",
    "build_developer_features",
    "build_in_situ_features",
    "build_project_features",
    "catalog_fingerprint",
    "encode_ide_version",
    "fit_encoders",
    "parse_version",
    "read_encoders",
    "read_matrix_csv",
    "write_encoders",
    "write_matrix_csv",
]
