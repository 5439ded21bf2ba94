#!/usr/bin/env python3
"""Write JSON Schemas for the public config documents to docs/schemas/.

One file per model: experiment configs, CQ queries and catalog entries.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import orjson
from pydantic import BaseModel

from marp.models.schemas import CQQuery, ExampleSpec, ExperimentConfig, ProbeQuery
from marp.services.config_loader import JSON_OPTIONS

MODELS: dict[str, type[BaseModel]] = {
    "experiment_config": ExperimentConfig,
    "cq_query": CQQuery,
    "probe_query": ProbeQuery,
    "example_spec": ExampleSpec,
}


def export(out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, model in MODELS.items():
        path = out_dir / f"{name}.schema.json"
        schema = model.model_json_schema(by_alias=True)
        path.write_bytes(orjson.dumps(schema, option=JSON_OPTIONS) + b"\n")
        written.append(path)
    return written


def main() -> None:
    ap = argparse.ArgumentParser(description="Export config JSON Schemas")
    ap.add_argument(
        "--out-dir",
        type=Path,
        default=Path("docs/schemas"),
        help="Output directory (default: docs/schemas)",
    )
    args = ap.parse_args()
    if args.out_dir.exists() and not args.out_dir.is_dir():
        raise SystemExit(f"Not a directory: {args.out_dir}")
    for path in export(args.out_dir):
        print(f"Wrote {path}")


if __name__ == "__main__":
    main()
