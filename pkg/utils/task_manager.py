# utils/task_manager.py

import time
import logging
import threading
import uuid
from typing import Dict, Any, Callable, List, Optional, Sequence
from concurrent.futures import ThreadPoolExecutor

from utils.config import max_workers

log = logging.getLogger(__name__)

# task_id -> {status, label, result, error, submit_time, start_time, end_time}
TASK_STORE: Dict[str, Dict[str, Any]] = {}

# Bloqueio para acesso seguro ao dicionário de tarefas
task_store_lock = threading.Lock()

_executor: Optional[ThreadPoolExecutor] = None
_executor_lock = threading.Lock()


def get_executor() -> ThreadPoolExecutor:
    """Cria o executor sob demanda, com HOLOMORPHIC_MAX_WORKERS threads."""
    global _executor
    with _executor_lock:
        if _executor is None:
            _executor = ThreadPoolExecutor(max_workers=max_workers(), thread_name_prefix="holo")
        return _executor


def generate_task_id() -> str:
    return str(uuid.uuid4())


def update_task_status(task_id: str, **kwargs) -> None:
    with task_store_lock:
        if task_id in TASK_STORE:
            TASK_STORE[task_id].update(kwargs)
        else:
            log.warning(f"Tentativa de atualizar tarefa inexistente: {task_id}")


def forget_tasks(task_ids: Sequence[str]) -> None:
    with task_store_lock:
        for task_id in task_ids:
            TASK_STORE.pop(task_id, None)


def execute_task(task_id: str, func: Callable, *args, **kwargs) -> Any:
    """
    Executa a função dentro do executor e atualiza o registro
    (pending → processing → completed/failed). Exceções são relançadas para
    que o Future as carregue.
    """
    update_task_status(task_id, status="processing", start_time=time.time())
    try:
        result = func(*args, **kwargs)
    except Exception as e:
        log.error(f"Erro na tarefa {task_id}: {e}", exc_info=True)
        update_task_status(task_id, status="failed", error=str(e), end_time=time.time())
        raise
    update_task_status(task_id, status="completed", end_time=time.time())
    log.debug(f"Tarefa {task_id} concluída")
    return result


def submit_task(func: Callable, *args, label: str = "", **kwargs):
    """
    Submete uma função ao executor.

    Returns:
        Tuple[str, Future]: ID da tarefa e o Future correspondente
    """
    task_id = generate_task_id()
    with task_store_lock:
        TASK_STORE[task_id] = {
            "status": "pending",
            "label": label,
            "submit_time": time.time(),
            "error": None,
        }
    future = get_executor().submit(execute_task, task_id, func, *args, **kwargs)
    log.debug(f"Tarefa {task_id} ({label}) enviada para processamento")
    return task_id, future


def run_tasks(funcs: Sequence[Callable[[], Any]], labels: Optional[Sequence[str]] = None,
              parallel: bool = True) -> List[Any]:
    """
    Executa computações independentes e devolve os resultados na ordem de
    submissão. A primeira exceção (na ordem de submissão) é relançada depois
    que todas as tarefas terminam.

    Args:
        funcs: Funções sem argumentos
        labels: Rótulos para log (opcional)
        parallel (bool): False executa em série na thread atual
    """
    labels = list(labels) if labels is not None else [f"task-{i}" for i in range(len(funcs))]
    if not parallel or len(funcs) <= 1:
        return [func() for func in funcs]

    submitted = [submit_task(func, label=label) for func, label in zip(funcs, labels)]
    results: List[Any] = []
    first_error: Optional[BaseException] = None
    for task_id, future in submitted:
        try:
            results.append(future.result())
        except Exception as e:
            results.append(None)
            if first_error is None:
                first_error = e
    forget_tasks([task_id for task_id, _ in submitted])
    if first_error is not None:
        raise first_error
    return results
