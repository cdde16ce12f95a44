import os
from unittest.mock import ANY, Mock, patch

import toml
from click.testing import CliRunner

from pbar_omega.clis.settings import _load_settings, _parse_value, _write_settings, settings_cli
from pbar_omega.config import BLOCK_SETTINGS_NAME


class TestLoadSettings:
    def test_missing_file(self) -> None:
        runner = CliRunner()
        with runner.isolated_filesystem():
            assert _load_settings("missing.toml") == {BLOCK_SETTINGS_NAME: {}}

    def test_round_trip(self) -> None:
        data = {BLOCK_SETTINGS_NAME: {"PRECISION": 256, "TAU_POINTS": ["0.11,0.93"]}}
        runner = CliRunner()
        with runner.isolated_filesystem():
            _write_settings("settings.toml", data)
            assert os.path.exists("settings.toml")
            assert _load_settings("settings.toml") == data

    def test_other_blocks_are_kept(self) -> None:
        runner = CliRunner()
        with runner.isolated_filesystem():
            with open("settings.toml", "w") as file:
                toml.dump({"other": {"KEY": 1}}, file)
            assert _load_settings("settings.toml") == {"other": {"KEY": 1}, BLOCK_SETTINGS_NAME: {}}


class TestParseValue:
    def test_literals(self) -> None:
        assert _parse_value("256") == 256
        assert _parse_value("1e-4") == 1e-4
        assert _parse_value('["0.11,0.93", "0.31,1.49"]') == ["0.11,0.93", "0.31,1.49"]

    def test_raw_text(self) -> None:
        assert _parse_value("0.11,0.93") == "0.11,0.93"


class TestSetSetting:
    @patch("pbar_omega.clis.settings._write_settings")
    @patch("pbar_omega.clis.settings._load_settings")
    def test_set(self, mock_load_settings: Mock, mock_write_settings: Mock) -> None:
        mock_load_settings.return_value = {BLOCK_SETTINGS_NAME: {"GUARD_BITS": 32}}
        runner = CliRunner()
        result = runner.invoke(settings_cli, ["set", "precision", "256"])
        assert result.exit_code == 0
        assert result.output == "Successfully registered.\n"

        data = {BLOCK_SETTINGS_NAME: {"GUARD_BITS": 32, "PRECISION": 256}}
        mock_write_settings.assert_called_once_with(ANY, data)

    @patch("pbar_omega.clis.settings._write_settings")
    @patch("pbar_omega.clis.settings._load_settings")
    def test_unknown_key(self, mock_load_settings: Mock, mock_write_settings: Mock) -> None:
        runner = CliRunner()
        result = runner.invoke(settings_cli, ["set", "token", "abc"])
        assert result.exit_code == 2
        assert "Unknown setting TOKEN" in result.output
        mock_load_settings.assert_not_called()
        mock_write_settings.assert_not_called()

    @patch("pbar_omega.clis.settings._write_settings")
    @patch("pbar_omega.clis.settings._load_settings")
    def test_lattice_keys_are_not_settings(self, mock_load_settings: Mock, mock_write_settings: Mock) -> None:
        runner = CliRunner()
        result = runner.invoke(settings_cli, ["set", "zeta_denominator", "8"])
        assert result.exit_code == 2
        assert "Unknown setting ZETA_DENOMINATOR" in result.output
        mock_load_settings.assert_not_called()
        mock_write_settings.assert_not_called()


class TestShowSettings:
    @patch("pbar_omega.clis.settings.print_settings")
    def test_show(self, mock_print_settings: Mock) -> None:
        runner = CliRunner()
        result = runner.invoke(settings_cli, ["show"])
        assert result.exit_code == 0

        shown = mock_print_settings.call_args.args[0]
        assert shown["PRECISION"] == 192
        assert "TAU_POINTS" in shown
        assert "LATTICE_DENOMINATOR" not in shown
        assert "ZETA_DENOMINATOR" not in shown
