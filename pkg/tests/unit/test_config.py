"""Unit tests for INI configuration loading and overrides."""

import pytest

from src.config import (
    ConfigError,
    LabConfig,
    RunSettings,
    load_config,
    parse_override,
    to_ini,
)


@pytest.fixture
def ini_file(tmp_path):
    """Write INI text to a temporary file and return its path."""

    def _write(text: str):
        path = tmp_path / "lab.ini"
        path.write_text(text, encoding="utf-8")
        return path

    return _write


class TestParseOverride:
    """Test splitting of section.key=value overrides."""

    def test_splits_on_first_equals(self):
        """Test that only the first '=' separates key from value."""
        assert parse_override("gan.lr=1e-3") == ("gan", "lr", "1e-3")
        assert parse_override("run.out=a=b") == ("run", "out", "a=b")

    def test_missing_equals_rejected(self):
        """Test that an override without a value is refused."""
        with pytest.raises(ConfigError, match="section.key=value"):
            parse_override("gan.lr")

    def test_missing_section_rejected(self):
        """Test that a bare key is refused."""
        with pytest.raises(ConfigError, match="section.key"):
            parse_override("lr=0.1")


class TestLoadConfig:
    """Test loading defaults, files and overrides."""

    def test_defaults_without_file(self):
        """Test that no file and no overrides gives the dataclass defaults."""
        config = load_config()
        assert config.run == RunSettings()
        assert config.synth.seed == 0

    def test_overrides_are_coerced(self):
        """Test that overrides are converted to each field's declared type."""
        config = load_config(
            overrides=[
                "synth.seed=7",
                "gan.lr=0.5",
                "gan.constant_init=no",
                "faset.eval_ns=1,2,4",
                "faset.models=attsets_faset,max",
            ]
        )
        assert config.synth.seed == 7
        assert config.gan.lr == 0.5
        assert config.gan.constant_init is False
        assert config.faset.eval_ns == (1, 2, 4)
        assert config.faset.models == ("attsets_faset", "max")

    def test_file_values_then_overrides(self, ini_file):
        """Test that overrides win over values read from the file."""
        path = ini_file("[gan]\nbatch_size = 8\ncritic_steps = 5\n")
        config = load_config(path, ["gan.critic_steps=9"])
        assert config.gan.batch_size == 8
        assert config.gan.critic_steps == 9

    def test_unknown_section_and_key_reported_together(self, ini_file):
        """Test that every unknown name is listed in one error."""
        path = ini_file("[nope]\nx = 1\n\n[gan]\nwhatever = 2\n")
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        message = str(excinfo.value)
        assert "unknown section [nope]" in message
        assert "unknown key gan.whatever" in message

    def test_bad_value_names_key(self):
        """Test that an unparsable value names the offending key."""
        with pytest.raises(ConfigError, match="gan.batch_size"):
            load_config(overrides=["gan.batch_size=many"])

    def test_bad_boolean_rejected(self):
        """Test that booleans accept only the usual spellings."""
        with pytest.raises(ConfigError, match="gan.constant_init"):
            load_config(overrides=["gan.constant_init=maybe"])

    def test_validation_errors_prefixed_by_section(self):
        """Test that failed validation names every failing section."""
        with pytest.raises(ConfigError) as excinfo:
            load_config(overrides=["run.jobs=0", "gan.batch_size=0"])
        message = str(excinfo.value)
        assert "[run]" in message
        assert "[gan]" in message

    def test_missing_file_rejected(self, tmp_path):
        """Test that an unreadable path raises ConfigError."""
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(tmp_path / "absent.ini")

    def test_invalid_log_level(self):
        """Test that the log level must be a known name."""
        with pytest.raises(ConfigError, match="log_level"):
            load_config(overrides=["run.log_level=LOUD"])


class TestToIni:
    """Test serialization of the resolved configuration."""

    def test_lists_every_section(self):
        """Test that each section header appears in declaration order."""
        text = to_ini(LabConfig())
        headers = [line for line in text.splitlines() if line.startswith("[")]
        assert headers == ["[run]", "[synth]", "[faset]", "[bonet]", "[gan]"]

    def test_snapshot_reloads_to_same_config(self, ini_file):
        """Test that a written snapshot loads back to an equal config."""
        config = load_config(
            overrides=["synth.seed=3", "gan.lr=0.25", "faset.eval_ns=1,3"]
        )
        reloaded = load_config(ini_file(to_ini(config)))
        assert reloaded == config
