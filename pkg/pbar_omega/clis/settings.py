from typing import Any

import click
import toml

from pbar_omega.config import (
    BLOCK_SETTINGS_NAME,
    FLOAT_KEYS,
    INTEGER_KEYS,
    LIST_KEYS,
    SETTINGS_FILE_PATH,
    settings,
)
from pbar_omega.display import print_settings

KNOWN_KEYS = (*INTEGER_KEYS, *FLOAT_KEYS, *LIST_KEYS)


@click.group("settings")
def settings_cli() -> None:
    ...


def _load_settings(file_path: str) -> dict[str, Any]:
    try:
        current_settings = toml.load(file_path)
    except FileNotFoundError:
        current_settings = {BLOCK_SETTINGS_NAME: {}}

    current_settings.setdefault(BLOCK_SETTINGS_NAME, {})
    return current_settings


def _write_settings(file_path: str, current_settings: dict[str, Any]) -> None:
    with open(file_path, "w") as file:
        toml.dump(current_settings, file)


def _parse_value(value: str) -> Any:
    """TOML literal when the text is one (256, 1e-4, ["0.1,1.2"]), the raw text otherwise."""
    try:
        return toml.loads(f"value = {value}")["value"]
    except toml.TomlDecodeError:
        return value


@settings_cli.command(name="set", short_help="Store a setting in the settings file.")
@click.argument("key")
@click.argument("value")
def set_setting(key: str, value: str) -> None:
    """Store KEY = VALUE in the pbar-omega block of the settings file.

    VALUE is read as a TOML literal, so lists are written as ["0.11,0.93", "0.31,1.49"].
    """
    key = key.upper()
    if key not in KNOWN_KEYS:
        click.secho(f"Unknown setting {key}, expected one of {', '.join(KNOWN_KEYS)}.", fg="red")
        raise SystemExit(2)

    current_settings = _load_settings(SETTINGS_FILE_PATH)
    current_settings[BLOCK_SETTINGS_NAME].update({key: _parse_value(value)})

    _write_settings(SETTINGS_FILE_PATH, current_settings)

    click.secho("Successfully registered.", fg="green")


@settings_cli.command(name="show", short_help="Show the effective settings.")
def show_settings() -> None:
    print_settings({key: settings.get(key) for key in KNOWN_KEYS})


@click.group()
def config_cli() -> None:
    ...


config_cli.add_command(settings_cli)
