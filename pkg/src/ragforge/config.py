"""Layered configuration: defaults < ragforge.toml < environment < flags.

Keys are dotted (``chunk.max_tokens``). In the TOML file they are nested
tables; in the environment they are ``RAGFORGE_`` + upper-cased key with dots
as underscores (``RAGFORGE_CHUNK_MAX_TOKENS``). ``OPENAI_API_KEY`` is read
from the environment or a dotenv file.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from dotenv import dotenv_values

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_FILE = "ragforge.toml"
ENV_PREFIX = "RAGFORGE_"


def _bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int(raw) -> int:
    if isinstance(raw, bool):
        raise ValueError(f"not an integer: {raw!r}")
    if isinstance(raw, float) and not raw.is_integer():
        raise ValueError(f"not an integer: {raw!r}")
    return int(raw)


def _str(raw) -> str:
    if not isinstance(raw, (str, int, float)) or isinstance(raw, bool):
        raise ValueError(f"not a string: {raw!r}")
    return str(raw)


def _opt_str(raw):
    return None if raw in (None, "") else _str(raw)


def _choice(*options: str) -> Callable:
    def parse(raw):
        value = _str(raw)
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {value!r}")
        return value

    return parse


def _range(parse, lo=None, hi=None, lo_open=False):
    def check(raw):
        value = parse(raw)
        if lo is not None and (value < lo or (lo_open and value == lo)):
            raise ValueError(f"must be {'>' if lo_open else '>='} {lo}; got {value}")
        if hi is not None and value > hi:
            raise ValueError(f"must be <= {hi}; got {value}")
        return value

    return check


@dataclass(frozen=True)
class Key:
    default: Any
    parse: Callable


KEYS: dict[str, Key] = {
    "store.root": Key("./stores", _str),
    "store.name": Key("kb", _str),
    "corpus.dir": Key("./Data", _str),
    "chunk.max_tokens": Key(800, _range(_int, 1)),
    "chunk.overlap": Key(400, _range(_int, 0)),
    "chunk.mode": Key("fixed", _choice("fixed", "semantic")),
    "clean.lowercase": Key(False, _bool),
    "clean.strip_repeated_lines": Key(True, _bool),
    "clean.min_repeat_pages": Key(3, _range(_int, 2)),
    "clean.collapse_whitespace": Key(True, _bool),
    "embedding.backend": Key("hash", _choice("hash", "remote")),
    "embedding.dimension": Key(256, _range(_int, 1)),
    "embedding.endpoint": Key(None, _opt_str),
    "embedding.model": Key(None, _opt_str),
    "retrieve.k": Key(4, _range(_int, 0)),
    "retrieve.min_score": Key(0.0, _range(float, -1.0, 1.0)),
    "prompt.template_path": Key(None, _opt_str),
    "generation.backend": Key("offline", _choice("chat", "local", "offline")),
    "generation.model": Key(None, _opt_str),
    "generation.temperature": Key(0.7, _range(float, 0.0, 2.0)),
    "generation.top_p": Key(0.9, _range(float, 0.0, 1.0, lo_open=True)),
    "generation.endpoint": Key(None, _opt_str),
    "generation.timeout_s": Key(60.0, _range(float, 0.0, lo_open=True)),
    "generation.max_retries": Key(2, _range(_int, 0)),
    "remote.endpoint": Key("https://api.openai.com", _str),
    "remote.vector_store": Key(None, _opt_str),
    "remote.upload_dir": Key("./Upload", _str),
    "remote.assistant_name": Key("ragforge-assistant", _str),
    "remote.description": Key("Answers questions from the uploaded PDF knowledge base.", _str),
    "remote.instructions": Key(
        "Answer using the files in the knowledge base and cite the files you used.", _str
    ),
    "remote.model": Key("gpt-4o", _str),
    "remote.poll_interval_s": Key(1.0, _range(float, 0.0)),
    "remote.max_polls": Key(120, _range(_int, 1)),
    "remote.timeout_s": Key(60.0, _range(float, 0.0, lo_open=True)),
}


def env_name(key: str) -> str:
    return ENV_PREFIX + key.replace(".", "_").upper()


def _flatten(table: Mapping, prefix: str = "") -> dict[str, Any]:
    out = {}
    for name, value in table.items():
        key = f"{prefix}{name}"
        if isinstance(value, Mapping):
            out.update(_flatten(value, key + "."))
        else:
            out[key] = value
    return out


def read_config_file(path) -> dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return _flatten(data)


class CliConfig:
    """Resolved configuration with the source of each value kept for messages."""

    def __init__(self, values: dict[str, Any], sources: dict[str, str], api_key: str | None):
        self._values = values
        self.sources = sources
        self.api_key = api_key

    def __getitem__(self, key: str):
        return self._values[key]

    def get(self, key: str, default=None):
        return self._values.get(key, default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self._values)

    @classmethod
    def resolve(
        cls,
        flags: Mapping[str, Any] | None = None,
        config_path=None,
        environ: Mapping[str, str] | None = None,
        env_file=None,
    ) -> "CliConfig":
        """Merge all layers and validate; the first bad key raises ConfigError."""
        environ = os.environ if environ is None else environ
        raw: dict[str, Any] = {k: spec.default for k, spec in KEYS.items()}
        sources = {k: "default" for k in KEYS}

        if config_path is None and Path(CONFIG_FILE).is_file():
            config_path = CONFIG_FILE
        if config_path is not None:
            for key, value in read_config_file(config_path).items():
                if key not in KEYS:
                    raise ConfigError(key, f"unknown key in {config_path}")
                raw[key], sources[key] = value, str(config_path)

        for key in KEYS:
            if env_name(key) in environ:
                raw[key], sources[key] = environ[env_name(key)], env_name(key)

        for key, value in (flags or {}).items():
            if value is None:
                continue
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            raw[key], sources[key] = value, "command line"

        values = {}
        for key, spec in KEYS.items():
            if raw[key] is None:
                values[key] = None
                continue
            try:
                values[key] = spec.parse(raw[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, f"{exc} (from {sources[key]})") from None
        if values["chunk.overlap"] >= values["chunk.max_tokens"]:
            raise ConfigError(
                "chunk.overlap",
                f"must be smaller than chunk.max_tokens ({values['chunk.overlap']} >= {values['chunk.max_tokens']})",
            )
        if values["embedding.backend"] == "remote" and not (values["embedding.endpoint"] and values["embedding.model"]):
            raise ConfigError("embedding.endpoint", "remote embedding backend needs embedding.endpoint and embedding.model")
        return cls(values, sources, _api_key(environ, env_file))


def _api_key(environ: Mapping[str, str], env_file) -> str | None:
    if environ.get("OPENAI_API_KEY"):
        return environ["OPENAI_API_KEY"]
    path = Path(env_file) if env_file else Path(".env")
    if path.is_file():
        return dotenv_values(path).get("OPENAI_API_KEY") or None
    return None
