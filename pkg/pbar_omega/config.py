import os
from typing import Final

from dynaconf import Dynaconf, Validator

BLOCK_SETTINGS_NAME: Final[str] = "pbar-omega"

SETTINGS_FILE_PATH: Final[str] = f"{os.path.expanduser('~')}/.pbar-omega.toml"

DEFAULT_TAU_POINTS: Final[list[str]] = ["0.11,0.93", "-0.23,1.07", "0.31,1.49"]

INTEGER_KEYS: Final[tuple[str, ...]] = (
    "DEFAULT_ORDER",
    "PRECISION",
    "GUARD_BITS",
    "ENUMERATION_CAP",
    "MAX_WORKERS",
    "CONTOUR_NODES",
)
FLOAT_KEYS: Final[tuple[str, ...]] = ("FD_STEP", "FD_STEP_LAPLACIAN")
LIST_KEYS: Final[tuple[str, ...]] = ("TAU_POINTS",)

settings = Dynaconf(
    envvar_prefix="PBAR_OMEGA",
    load_dotenv=True,
    settings_files=[SETTINGS_FILE_PATH],
    environments=[BLOCK_SETTINGS_NAME],
    default_env=BLOCK_SETTINGS_NAME,
    validators=[
        Validator("DEFAULT_ORDER", default=40),
        Validator("PRECISION", default=192),
        Validator("GUARD_BITS", default=64),
        Validator("TAU_POINTS", default=DEFAULT_TAU_POINTS),
        Validator("ENUMERATION_CAP", default=50),
        Validator("MAX_WORKERS", default=4),
        Validator("CONTOUR_NODES", default=64),
        Validator("FD_STEP", default=1e-4),
        Validator("FD_STEP_LAPLACIAN", default=1e-3),
    ],
)

settings.validators.register(
    Validator(*INTEGER_KEYS, is_type_of=int, gt=0),
    Validator(*FLOAT_KEYS, is_type_of=(int, float), gt=0),
    Validator("TAU_POINTS", is_type_of=list, len_min=1),
    Validator(
        "PRECISION",
        gte=53,
        messages={"operations": "PRECISION must be at least 53 bits, got {value}."},
    ),
)
