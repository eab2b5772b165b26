"""
Configuration loading for the service and the CLI.

Precedence: CLI flag > config file > environment > shipped defaults.
"""

import json
import os
from typing import Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from tool.LLM.schema import JudgeBackendSpec
from tool.rewardAgg.schema import AggregationConfig, ConfigInvalid

load_dotenv()

ROOT_DIR = os.path.dirname(os.path.abspath(__file__))
SHIPPED_CONFIG_PATH = os.path.join(ROOT_DIR, "reward_config.json")
DEFAULT_BIND = "127.0.0.1:5000"


def resolve_config_path(cli_path: Optional[str] = None) -> Optional[str]:
    if cli_path:
        return cli_path
    env_path = os.getenv("REWARD_CONFIG_PATH")
    if env_path:
        return env_path
    return SHIPPED_CONFIG_PATH if os.path.exists(SHIPPED_CONFIG_PATH) else None


def load_aggregation_config(cli_path: Optional[str] = None, **cli_overrides) -> AggregationConfig:
    """File (or defaults when no file is found), then CLI overrides on top"""
    path = resolve_config_path(cli_path)
    data = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as file:
                data = json.load(file)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid(f"cannot read aggregation config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigInvalid(f"aggregation config {path} must be a JSON object")
    return AggregationConfig.from_dict(data).with_overrides(**cli_overrides)


def _env_number(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigInvalid(f"{name}={raw!r} is not a valid {cast.__name__}")


def load_backend_spec(
    kind: Optional[str] = None,
    endpoint: Optional[str] = None,
    seed: Optional[int] = None,
    model: Optional[str] = None,
) -> JudgeBackendSpec:
    """Judge backend from REWARD_JUDGE_* variables, CLI values winning"""
    fields = {
        "kind": kind or "mock",
        "seed": seed if seed is not None else _env_number("REWARD_MOCK_SEED", int, 0),
        "endpoint": endpoint or os.getenv("REWARD_JUDGE_ENDPOINT", ""),
        "model": model or os.getenv("REWARD_JUDGE_MODEL", ""),
        "timeout": _env_number("REWARD_JUDGE_TIMEOUT", float, 60.0),
        "max_retries": _env_number("REWARD_JUDGE_MAX_RETRIES", int, 3),
        "inline_images": os.getenv("REWARD_JUDGE_INLINE_IMAGES", "false").lower() == "true",
        "api_key": os.getenv("REWARD_JUDGE_API_KEY", ""),
    }
    try:
        return JudgeBackendSpec(**fields)
    except ValidationError as e:
        # the error text may echo field values, so drop the key before reporting
        fields.pop("api_key")
        raise ConfigInvalid(f"invalid judge backend settings {fields}: {e.errors()[0]['msg']}")


def parse_bind(value: Optional[str] = None) -> Tuple[str, int]:
    bind = value or os.getenv("REWARD_BIND") or DEFAULT_BIND
    host, sep, port = bind.rpartition(":")
    if not sep or not host:
        raise ConfigInvalid(f"bind address must look like host:port, got {bind!r}")
    try:
        port_number = int(port)
    except ValueError:
        raise ConfigInvalid(f"bind port must be an integer, got {port!r}")
    if not 0 <= port_number <= 65535:
        raise ConfigInvalid(f"bind port {port_number} out of range")
    return host, port_number
