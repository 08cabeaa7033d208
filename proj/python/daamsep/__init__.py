"""Content/style separation metrics over diffusion cross-attention dumps."""

from ._daamsep import (
    AttentionDump,
    AttentionRecord,
    ConfigError,
    DumpError,
    analyze_pair,
    attribution_map,
    effect_size,
    generate_corpus,
    iou,
    paired_t_test,
    read_dump,
    render_overlay,
    render_prompt,
    run_pipeline,
    threshold_mask,
    upsample,
    validate_pair,
    write_synthetic_corpus,
)

__all__ = [
    "AttentionDump",
    "AttentionRecord",
    "ConfigError",
    "DumpError",
    "analyze_pair",
    "attribution_map",
    "effect_size",
    "generate_corpus",
    "iou",
    "paired_t_test",
    "read_dump",
    "render_overlay",
    "render_prompt",
    "run_pipeline",
    "threshold_mask",
    "upsample",
    "validate_pair",
    "write_synthetic_corpus",
]
