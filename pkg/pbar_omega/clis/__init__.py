from .series import series_cli  # noqa: F401
from .settings import config_cli  # noqa: F401
from .verify import verify_cli  # noqa: F401
