"""Reading and writing experiment config documents."""

import logging
from pathlib import Path
from typing import Any, Optional, Sequence, TypeVar, Union

import orjson
from pydantic import BaseModel, ValidationError

from marp.errors import ConfigError
from marp.models.schemas import ExperimentConfig
from marp.settings import MarpSettings, get_settings

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def _escape(token: Union[str, int]) -> str:
    return str(token).replace("~", "~0").replace("/", "~1")


def json_pointer(
    document: Any, loc: Sequence[Union[str, int]], missing: bool = False
) -> str:
    """Pointer into the raw document for a pydantic error location.

    Location parts with no counterpart in the document (discriminator tags,
    validator names) are skipped. For a missing field the last part names it.
    """
    parts: list[str] = []
    node = document
    for position, token in enumerate(loc):
        if isinstance(node, dict) and token in node:
            node = node[token]
        elif isinstance(node, list) and isinstance(token, int) and token < len(node):
            node = node[token]
        elif missing and position == len(loc) - 1:
            node = None
        else:
            continue
        parts.append(_escape(token))
    return "/" + "/".join(parts) if parts else ""


def problems_from(error: ValidationError, document: Any) -> list[tuple[str, str]]:
    return [
        (json_pointer(document, e["loc"], e["type"] == "missing"), e["msg"])
        for e in error.errors()
    ]


def decode(raw: Union[bytes, str]) -> Any:
    try:
        return orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise ConfigError([("", f"malformed JSON: {e}")]) from e


def validate(model: type[ModelT], document: Any) -> ModelT:
    try:
        return model.model_validate(document)
    except ValidationError as e:
        raise ConfigError(problems_from(e, document)) from e


def parse_config(
    raw: Union[bytes, str, dict], settings: Optional[MarpSettings] = None
) -> ExperimentConfig:
    """Validate a config document and apply environment overrides.

    MARP_SEED replaces any seed in the document; missing gap_tol and max_iter
    take the environment defaults.
    """
    document = raw if isinstance(raw, dict) else decode(raw)
    if not isinstance(document, dict):
        raise ConfigError([("", "config must be a JSON object")])
    config = validate(ExperimentConfig, document)

    env = settings or get_settings()
    updates: dict[str, Any] = {}
    if env.seed is not None:
        updates["seed"] = env.seed
    if "gap_tol" not in document:
        updates["gap_tol"] = env.default_gap_tol
    if "max_iter" not in document:
        updates["max_iter"] = env.default_max_iter
    if updates:
        logger.debug("Applying environment overrides %s", sorted(updates))
        config = config.model_copy(update=updates)
    return config


def load_config(
    path: Path, settings: Optional[MarpSettings] = None
) -> ExperimentConfig:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError([("", f"cannot read {path}: {e.strerror}")]) from e
    return parse_config(raw, settings)


def to_document(model: BaseModel) -> dict[str, Any]:
    return model.model_dump(mode="json", by_alias=True, exclude_none=True)


def dump_config(config: ExperimentConfig) -> bytes:
    return orjson.dumps(to_document(config), option=JSON_OPTIONS)
