"""Training-free full-reference image quality assessment from pretrained backbones."""

from .errors import (
    AdapterError,
    ConfigError,
    DecodeError,
    DegenerateInputError,
    DuplicateError,
    FitError,
    NumericsError,
    ParseError,
    ShapeError,
    SpecError,
    ZsiqaError,
)
from .image import RgbImage, decode_image, read_image, save_image
from .geometry import TileSet, dilate, preprocess, rotate, tile, translate
from .measures import (
    MeasureConfig,
    MeasureKind,
    cosine_distance,
    jsd,
    l2_distance,
    layer_distance,
    skld,
    to_distribution,
    wsd_1d,
)
from .stats import fit_logistic4, kendall_tau_b, pearson, spearman
from .backbone import (
    BackboneSession,
    BackboneSpec,
    FeatureStack,
    load_backbone,
    load_spec,
    save_spec,
    toy_backbone,
)
from .pipeline import (
    BatchItem,
    Mode,
    PairScore,
    Perturbation,
    PerturbationKind,
    ScoreRequest,
    score_batch,
    score_pair,
)
from .manifest import (
    EvalSample,
    Manifest,
    adapt_pipal,
    adapt_tid2013,
    load_manifest,
    write_manifest,
)
from .harness import (
    CorrelationReport,
    RunConfig,
    emit_report,
    evaluate,
    format_summary,
    load_run_config,
    reports_from_json,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterError", "ConfigError", "DecodeError", "DegenerateInputError",
    "DuplicateError", "FitError", "NumericsError", "ParseError", "ShapeError",
    "SpecError", "ZsiqaError",
    "RgbImage", "decode_image", "read_image", "save_image",
    "TileSet", "dilate", "preprocess", "rotate", "tile", "translate",
    "MeasureConfig", "MeasureKind", "cosine_distance", "jsd", "l2_distance",
    "layer_distance", "skld", "to_distribution", "wsd_1d",
    "fit_logistic4", "kendall_tau_b", "pearson", "spearman",
    "BackboneSession", "BackboneSpec", "FeatureStack", "load_backbone",
    "load_spec", "save_spec", "toy_backbone",
    "BatchItem", "Mode", "PairScore", "Perturbation", "PerturbationKind",
    "ScoreRequest", "score_batch", "score_pair",
    "EvalSample", "Manifest", "adapt_pipal", "adapt_tid2013", "load_manifest",
    "write_manifest",
    "CorrelationReport", "RunConfig", "emit_report", "evaluate",
    "format_summary", "load_run_config", "reports_from_json",
    "__version__",
]
