"""Image-to-SVG benchmark harness.

Subpackages:
  bench_dataset     manifest loading, stratified sampling, taxonomy stats
  svg_toolkit       SVG extraction, sanitization, deterministic rendering,
                    token counting, success-rate bookkeeping
  geometry          masks -> simplified polygons, OCR quad placement
  model_gateway     chat/embedding endpoint clients and prompt templates
  coder_pipelines   generation pipelines and the render-feedback revision loop
  scoring           embedding similarity, CodeVQA evaluators, aggregation
  run_orchestrator  run lifecycle, persistence, reports, human-task service
"""

__version__ = "0.1.0"
