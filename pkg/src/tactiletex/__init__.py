"""Tactile texture tooling: turn texture images into printable surface relief.

The pipeline: build or load a triangle mesh, displace its vertices along
their normals by a UV-sampled heightfield, recover heightfields from
displaced geometry, score the results with image metrics, and compare
generators statistically over whole corpora.
"""

from .dataset import (
    DatasetEntry,
    DatasetManifest,
    assign_split,
    augment_rotations,
    generate_synthetic_corpus,
    load_manifest,
    save_manifest,
    synthetic_heightfield,
    synthetic_texture,
)
from .displace import DisplacementParams, apply_heightfield, bake_texture_colors, freeze_except_top
from .errors import (
    DatasetError,
    DisplacementError,
    GeneratorError,
    ImageError,
    MeshError,
    ObjParseError,
    StatError,
    TactiletexError,
)
from .evaluate import run_formative, run_technical_eval
from .extract import (
    DisplacementStats,
    ExtractionResult,
    extract_heightfield,
    normal_displacements,
    raw_displacement_stats,
)
from .generators import (
    BaselineLuminance,
    GroundtruthPassthrough,
    RemoteGenerator,
    generate,
    health_check,
    parse_generator_spec,
)
from .heightfield import (
    Heightfield,
    TextureImage,
    load_heightfield,
    load_texture,
    luminance,
    resample,
    rotate90,
    sample_bilinear,
    save_heightfield,
    save_texture,
)
from .mesh import (
    TriMesh,
    UnitCubeTransform,
    compute_normals,
    load_obj,
    loads_obj,
    make_tile,
    normalize_unit_cube,
    planar_uvs,
    save_obj,
    subdivide_to,
)
from .metrics import MetricReport, compare, mse, pearson_r, rms_roughness, ssim
from .stattests import (
    Sample,
    friedman,
    games_howell,
    holm_correct,
    spearman,
    welch_anova,
    welch_t,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineLuminance",
    "DatasetEntry",
    "DatasetManifest",
    "DatasetError",
    "DisplacementError",
    "DisplacementParams",
    "DisplacementStats",
    "ExtractionResult",
    "GeneratorError",
    "GroundtruthPassthrough",
    "Heightfield",
    "ImageError",
    "MeshError",
    "MetricReport",
    "ObjParseError",
    "RemoteGenerator",
    "Sample",
    "StatError",
    "TactiletexError",
    "TextureImage",
    "TriMesh",
    "UnitCubeTransform",
    "apply_heightfield",
    "assign_split",
    "augment_rotations",
    "bake_texture_colors",
    "compare",
    "compute_normals",
    "extract_heightfield",
    "freeze_except_top",
    "friedman",
    "games_howell",
    "generate",
    "generate_synthetic_corpus",
    "health_check",
    "holm_correct",
    "load_heightfield",
    "load_manifest",
    "load_obj",
    "load_texture",
    "loads_obj",
    "luminance",
    "make_tile",
    "mse",
    "normal_displacements",
    "normalize_unit_cube",
    "parse_generator_spec",
    "pearson_r",
    "planar_uvs",
    "raw_displacement_stats",
    "resample",
    "rms_roughness",
    "rotate90",
    "run_formative",
    "run_technical_eval",
    "sample_bilinear",
    "save_heightfield",
    "save_manifest",
    "save_obj",
    "save_texture",
    "spearman",
    "ssim",
    "subdivide_to",
    "synthetic_heightfield",
    "synthetic_texture",
    "welch_anova",
    "welch_t",
    "wilcoxon_signed_rank",
]
