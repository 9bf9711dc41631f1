# mminforec/config.py
import os
from pathlib import Path

def _env_str(key: str, default: str = "") -> str:
    return os.getenv(key, default)

# --- logging ---
LOG_LEVEL = _env_str("LOG_LEVEL", "INFO")

# --- paths ---
# default run directory when --out is not given
OUT_DIR = _env_str("MMINFOREC_OUT", "runs")
RESOURCES_PATH = str(Path(__file__).parent / "resources")
GRIDS_PATH = str(Path(RESOURCES_PATH) / "grids.yaml")

# --- behavior ---
# users scored per chunk during full ranking
EVAL_CHUNK = 256
