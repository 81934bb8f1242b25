"""MkDocs hooks for the augmap documentation."""

import warnings
from typing import Any

from augmap import __version__

warnings.filterwarnings(
    "ignore",
    message="autorefs `span` elements are deprecated in favor of `autoref` elements",
    category=DeprecationWarning,
)


def on_config(config: Any) -> Any:
    """Stamp the package version into the site name and the template extras."""
    config["site_name"] = f"augmap {__version__}"
    config.setdefault("extra", {})["version"] = __version__
    return config
