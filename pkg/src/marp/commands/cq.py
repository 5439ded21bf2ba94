"""`marp cq`: CQ-numbers and regularity probes for canned or configured pairs."""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional

import orjson

from marp.errors import InvalidParameterError
from marp.models.enums import ConeMethod
from marp.models.schemas import (
    AffineSubspaceSpec,
    BoundaryRestriction,
    CQQuery,
    SawtoothSpec,
    TransformedSpec,
)
from marp.services import cones
from marp.services.config_loader import JSON_OPTIONS, decode, validate
from marp.services.geometry import build_set
from marp.services.sawtooth import Sawtooth2D
from marp.settings import MarpSettings

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("cq", help="CQ-number of a pair of sets")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "--scenario",
        help="sawtooth | two-lines:ANGLE | finite-sets:FILE",
    )
    source.add_argument("--config", type=Path, help="CQ query JSON")
    parser.add_argument("--delta", type=float, default=None, help="Radius around c")
    parser.add_argument(
        "--delta-grid",
        default=None,
        help="Comma separated decreasing radii for the CQ condition",
    )
    parser.add_argument(
        "--method",
        type=ConeMethod,
        choices=list(ConeMethod),
        default=None,
        help="exact2d or sampled (default: exact2d)",
    )
    parser.add_argument("--samples", type=int, default=None, help="Sampled cone size")
    parser.add_argument("--seed", type=int, default=None, help="Sampler seed")
    parser.add_argument(
        "--probe-regularity",
        action="store_true",
        help="Also bound the regularity epsilon of A against B's restriction",
    )
    parser.set_defaults(func=cmd_cq)


def sawtooth_query() -> CQQuery:
    """The sawtooth and its mirror image, with their boundaries as (A~, B~)."""
    shape = SawtoothSpec()
    mirror = TransformedSpec(inner=shape, matrix=Sawtooth2D().reflector().tolist())
    return CQQuery(
        set_a=shape,
        restriction_a=BoundaryRestriction(set=shape),
        set_b=mirror,
        restriction_b=BoundaryRestriction(set=mirror),
        center=[0.0, 0.0],
    )


def two_lines_query(angle: float) -> CQQuery:
    """The horizontal axis and the line through 0 at the given angle."""
    return CQQuery(
        set_a=AffineSubspaceSpec(base=[0.0, 0.0], basis=[[1.0, 0.0]]),
        set_b=AffineSubspaceSpec(
            base=[0.0, 0.0], basis=[[math.cos(angle), math.sin(angle)]]
        ),
        center=[0.0, 0.0],
    )


def _read_json(path: Path) -> Any:
    try:
        return decode(Path(path).read_bytes())
    except OSError as e:
        raise InvalidParameterError(f"cannot read {path}: {e.strerror}") from e


def finite_sets_query(path: Path) -> CQQuery:
    """{"A": [[...]], "B": [[...]], "c": [...]} as two finite sets."""
    document = _read_json(path)
    if not isinstance(document, dict):
        raise InvalidParameterError("finite-sets file must be a JSON object")
    return validate(
        CQQuery,
        {
            "A": {"type": "finite", "points": document.get("A")},
            "B": {"type": "finite", "points": document.get("B")},
            "c": document.get("c"),
        },
    )


def scenario_query(scenario: str) -> CQQuery:
    name, _, argument = scenario.partition(":")
    if name == "sawtooth":
        return sawtooth_query()
    if name == "two-lines":
        try:
            return two_lines_query(float(argument))
        except ValueError as e:
            raise InvalidParameterError(f"two-lines needs an angle: {e}") from e
    if name == "finite-sets" and argument:
        return finite_sets_query(Path(argument))
    raise InvalidParameterError(f"Unknown scenario {scenario!r}")


def resolve_query(args: argparse.Namespace, settings: MarpSettings) -> CQQuery:
    """Scenario or config file, with command-line and environment overrides."""
    if args.config is not None:
        query = validate(CQQuery, _read_json(args.config))
    else:
        query = scenario_query(args.scenario)
    updates: dict[str, Any] = {}
    if args.delta is not None:
        updates["delta"] = args.delta
    if args.method is not None:
        updates["method"] = args.method
    if args.samples is not None:
        updates["samples"] = args.samples
    elif args.config is None:
        updates["samples"] = settings.sample_count
    seed: Optional[int] = args.seed if args.seed is not None else settings.seed
    if seed is not None:
        updates["seed"] = seed
    if args.delta_grid:
        updates["delta_grid"] = [float(v) for v in args.delta_grid.split(",")]
    return query.model_copy(update=updates) if updates else query


def cmd_cq(args: argparse.Namespace, settings: MarpSettings) -> int:
    query = resolve_query(args, settings)
    output: dict[str, Any] = cones.evaluate_cq(query).model_dump(mode="json")

    if query.delta_grid:
        condition = cones.cq_condition(
            build_set(query.set_a),
            cones.build_restriction(query.restriction_a),
            build_set(query.set_b),
            cones.build_restriction(query.restriction_b),
            query.center,
            query.delta_grid,
            method=query.method,
            samples=query.samples,
            seed=query.seed,
        )
        output["condition"] = condition.model_dump(mode="json")

    if args.probe_regularity or args.scenario == "sawtooth":
        probe = cones.regularity_probe(
            build_set(query.set_a),
            cones.build_restriction(query.restriction_b),
            query.center,
            query.delta,
            seed=query.seed,
        )
        output["epsilon_lower"] = probe.epsilon_lower
        if probe.witness is not None:
            output["probe_witness"] = [p.tolist() for p in probe.witness]

    sys.stdout.write(orjson.dumps(output, option=JSON_OPTIONS).decode() + "\n")
    return 0
