# utils/file_utils.py

import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from modules.errors import HolomorphicError, InternalError, StageError

log = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def safe_filename(filename: str) -> str:
    """
    Gera um nome de arquivo seguro, substituindo caracteres problemáticos.

    Args:
        filename (str): Nome de arquivo original

    Returns:
        str: Nome de arquivo seguro
    """
    safe_name = "".join(c for c in filename if c.isalnum() or c in "._- ")
    return safe_name.replace(" ", "_")


def content_hash(data: bytes, length: int = 12) -> str:
    return hashlib.sha256(data).hexdigest()[:length]


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    """Grava num temporário no mesmo diretório e renomeia por cima do destino."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.debug(f"Arquivo gravado: {path}")
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def frame_to_csv_text(frame: pd.DataFrame, header: Optional[Dict[str, str]] = None) -> str:
    lines = [f"# {key}={value}\n" for key, value in (header or {}).items()]
    body = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return "".join(lines) + body


def write_csv(frame: pd.DataFrame, path: Union[str, Path],
              header: Optional[Dict[str, str]] = None) -> Path:
    """CSV com 17 dígitos significativos e comentários `# chave=valor` opcionais no topo."""
    return atomic_write_text(path, frame_to_csv_text(frame, header))


def read_csv(path: Union[str, Path]) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Lê um CSV gravado por write_csv, devolvendo (tabela, cabeçalho)."""
    header: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    body_lines = []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and "=" in line and not body_lines:
            key, value = line[2:].rstrip("\n").split("=", 1)
            header[key] = value
        else:
            body_lines.append(line)
    return pd.read_csv(io.StringIO("".join(body_lines))), header


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    return str(value)


def json_text(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default, ensure_ascii=False) + "\n"


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, json_text(payload))


def remove_files(directory: Union[str, Path], names: Iterable[str]) -> List[str]:
    """
    Remove de `directory` apenas os arquivos listados em `names` (caminhos
    relativos). Nomes que escapam do diretório ou que não são arquivos comuns
    são ignorados; o restante do diretório não é tocado.

    Returns:
        List[str]: nomes efetivamente removidos
    """
    directory = Path(directory).resolve()
    removed = []
    for name in names:
        path = (directory / name).resolve()
        if directory not in path.parents:
            log.warning(f"Ignorando caminho fora do diretório de saída: {name}")
            continue
        if path.is_file():
            path.unlink()
            removed.append(name)
    if removed:
        log.info(f"{len(removed)} artefato(s) removido(s) de {directory}")
    return removed


def prepare_error_payload(error: BaseException, stage: Optional[str] = None) -> Dict[str, Any]:
    """
    Prepara o JSON de falha padronizado.

    Args:
        error: Exceção capturada na fronteira de comando
        stage (str, optional): Etapa do experimento

    Returns:
        Dict[str, Any]: {"success": False, "error": ..., "code": ..., "stage": ...}
    """
    if isinstance(error, HolomorphicError):
        payload = error.to_payload()
    else:
        payload = InternalError(str(error)).to_payload()
    if stage is not None and "stage" not in payload:
        payload["stage"] = stage
    if isinstance(error, StageError):
        payload["stage"] = error.stage
    return payload


def prepare_success_payload(data: Any = None, message: str = "Operação concluída com sucesso") -> Dict[str, Any]:
    response = {"success": True, "message": message}
    if data is not None:
        response["data"] = data
    return response
