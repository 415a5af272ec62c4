import pytest

from ragforge.config import KEYS, CliConfig, env_name
from ragforge.errors import ConfigError


def resolve(tmp_path, flags=None, toml=None, environ=None):
    path = None
    if toml is not None:
        path = tmp_path / "ragforge.toml"
        path.write_text(toml)
    return CliConfig.resolve(flags, config_path=path, environ=environ or {}, env_file=tmp_path / "none.env")


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = resolve(tmp_path)
    assert cfg["chunk.max_tokens"] == 800 and cfg["chunk.overlap"] == 400
    assert cfg["retrieve.k"] == 4
    assert cfg["generation.temperature"] == 0.7 and cfg["generation.top_p"] == 0.9
    assert cfg.api_key is None
    assert set(cfg.as_dict()) == set(KEYS)


def test_layer_precedence(tmp_path):
    toml = "[retrieve]\nk = 6\nmin_score = 0.2\n[store]\nname = 'filekb'\n"
    env = {env_name("retrieve.k"): "7", env_name("store.root"): "/tmp/envroot"}
    cfg = resolve(tmp_path, {"retrieve.k": 9, "chunk.mode": None}, toml, env)
    assert cfg["retrieve.k"] == 9
    assert cfg["store.root"] == "/tmp/envroot"
    assert cfg["store.name"] == "filekb"
    assert cfg["retrieve.min_score"] == 0.2
    assert cfg["chunk.mode"] == "fixed"
    assert cfg.sources["retrieve.k"] == "command line"


def test_env_name():
    assert env_name("chunk.max_tokens") == "RAGFORGE_CHUNK_MAX_TOKENS"


@pytest.mark.parametrize(
    "env, key",
    [
        ({"RAGFORGE_CHUNK_MAX_TOKENS": "abc"}, "chunk.max_tokens"),
        ({"RAGFORGE_GENERATION_TOP_P": "0"}, "generation.top_p"),
        ({"RAGFORGE_CHUNK_OVERLAP": "800"}, "chunk.overlap"),
        ({"RAGFORGE_CLEAN_LOWERCASE": "maybe"}, "clean.lowercase"),
        ({"RAGFORGE_EMBEDDING_BACKEND": "remote"}, "embedding.endpoint"),
    ],
)
def test_bad_values_name_the_key(tmp_path, env, key):
    with pytest.raises(ConfigError) as info:
        resolve(tmp_path, environ=env)
    assert info.value.exit_code == 2
    assert key in str(info.value)


def test_unknown_file_key(tmp_path):
    with pytest.raises(ConfigError, match="retrieve.top"):
        resolve(tmp_path, toml="[retrieve]\ntop = 3\n")


def test_bad_toml(tmp_path):
    with pytest.raises(ConfigError, match="invalid TOML"):
        resolve(tmp_path, toml="[retrieve\n")


def test_api_key_from_env_then_dotenv(tmp_path):
    env_file = tmp_path / ".env"
    env_file.write_text("OPENAI_API_KEY=sk-file\n")
    from_file = CliConfig.resolve(environ={}, env_file=env_file)
    assert from_file.api_key == "sk-file"
    from_env = CliConfig.resolve(environ={"OPENAI_API_KEY": "sk-env"}, env_file=env_file)
    assert from_env.api_key == "sk-env"
