# commands/common.py

import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import click

from utils.file_utils import json_text, prepare_error_payload, prepare_success_payload

log = logging.getLogger(__name__)

CommandResult = Tuple[bool, str, Dict[str, Any]]


def execute(action: Callable[[], Any], message: str, stage: Optional[str] = None) -> CommandResult:
    """
    Executa a ação de um comando e converte o resultado em (sucesso, mensagem, payload).

    Args:
        action: Função sem argumentos que devolve os dados do comando
        message (str): Mensagem de sucesso
        stage (str, optional): Nome da etapa, repassado ao JSON de falha

    Returns:
        CommandResult: Tupla (success, message, payload)
    """
    try:
        data = action()
    except Exception as e:
        log.error(f"Erro no comando '{stage or message}': {e}", exc_info=True)
        payload = prepare_error_payload(e, stage)
        return False, payload.get("error", str(e)), payload
    return True, message, prepare_success_payload(data, message)


def finish(result: CommandResult) -> None:
    """Imprime o payload JSON e encerra com código 1 em caso de falha."""
    success, message, payload = result
    click.echo(json_text(payload), nl=False)
    if success:
        log.info(message)
    else:
        log.error(f"Falha: {message}")
        sys.exit(1)


def parse_int_list(value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"lista de inteiros inválida: {value}")


def parse_assignments(values: Tuple[str, ...]) -> Dict[str, Any]:
    """Converte pares chave=valor (valor em JSON quando possível) em sobrescritas pontilhadas."""
    overrides: Dict[str, Any] = {}
    for item in values:
        if "=" not in item:
            raise click.BadParameter(f"esperado chave=valor, recebido '{item}'")
        key, raw = item.split("=", 1)
        try:
            overrides[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key.strip()] = raw
    return overrides
