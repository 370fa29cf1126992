"""Load verifier overrides from a lo_verify.yaml file."""

import os
from pathlib import Path
from typing import Optional

import yaml

from utils.log import get_logger

logger = get_logger("config")

ENV_PREFIX = "LO_VERIFY_"


def load_config_from_yaml(config_file: Optional[str] = None) -> dict:
    """
    Load overrides from a YAML file and export them as environment variables.

    Only keys starting with LO_VERIFY_ are exported. Variables already set in
    the environment take precedence over the file.

    Args:
        config_file: Path to the YAML file. Defaults to lo_verify.yaml in project root.

    Returns:
        Dictionary of the overrides that were exported
    """
    if config_file is None:
        project_root = Path(__file__).parent.parent
        config_file = project_root / "lo_verify.yaml"
    else:
        config_file = Path(config_file)

    if not config_file.exists():
        logger.debug(f"Config file not found: {config_file} (using environment and defaults)")
        return {}

    try:
        with open(config_file, "r", encoding="utf-8") as f:
            overrides = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.warning(f"⚠️  Could not parse {config_file}: {e}")
        return {}

    if not overrides:
        logger.debug(f"Config file is empty: {config_file}")
        return {}

    if not isinstance(overrides, dict):
        logger.warning(f"⚠️  Ignoring {config_file}: top level must be a mapping")
        return {}

    exported = {}
    for key, value in overrides.items():
        key = str(key)
        if not key.startswith(ENV_PREFIX):
            logger.warning(f"⚠️  Ignoring unknown config key {key}")
            continue
        if value is None:
            continue
        # Environment variables take precedence over the file
        if key not in os.environ:
            os.environ[key] = str(value)
            exported[key] = value

    logger.info(f"✓ Loaded {len(exported)} overrides from {config_file.name}")
    return exported
