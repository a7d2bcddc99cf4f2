# utils/config.py

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import load_dotenv

log = logging.getLogger(__name__)

DEFAULT_OUTPUT_ROOT = "./artifacts"
DEFAULT_MAX_WORKERS = 4

_env_loaded = False


def load_environment() -> None:
    """Carrega o .env (uma vez por processo), sobrescrevendo variáveis existentes."""
    global _env_loaded
    if not _env_loaded:
        load_dotenv(override=True)
        _env_loaded = True


def output_root() -> Path:
    """Diretório raiz dos artefatos (HOLOMORPHIC_OUTPUT_ROOT ou ./artifacts)."""
    load_environment()
    return Path(os.getenv("HOLOMORPHIC_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT))


def max_workers() -> int:
    load_environment()
    raw = os.getenv("HOLOMORPHIC_MAX_WORKERS", str(DEFAULT_MAX_WORKERS))
    try:
        value = int(raw)
    except ValueError:
        log.warning(f"HOLOMORPHIC_MAX_WORKERS inválido ({raw!r}); usando {DEFAULT_MAX_WORKERS}.")
        return DEFAULT_MAX_WORKERS
    return max(1, value)


def load_json_config(path: Optional[Union[str, Path]]) -> Dict[str, Any]:
    """Lê um arquivo de configuração JSON (ou devolve {} quando path é None)."""
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Configuração em {path} deve ser um objeto JSON.")
    log.info(f"Configuração carregada de {path}")
    return data
