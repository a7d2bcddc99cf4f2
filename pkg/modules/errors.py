# modules/errors.py

from typing import Any, Dict, Optional


class HolomorphicError(Exception):
    """
    Erro base da biblioteca. Cada subclasse carrega um `code` legível por máquina,
    usado pela camada de comandos para montar o JSON de falha.
    """
    code = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> Dict[str, Any]:
        payload = {"success": False, "error": self.message, "code": self.code}
        if self.details:
            payload["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return payload


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


class InvalidArgumentError(HolomorphicError):
    code = "invalid-argument"


class DegenerateDatasetError(HolomorphicError):
    code = "degenerate-dataset"


class DomainViolationError(HolomorphicError):
    code = "domain-violation"


class IntegrationError(HolomorphicError):
    code = "integration-failure"


class SingularEvaluationError(HolomorphicError):
    code = "singular-evaluation"


class NotPositiveDefiniteError(HolomorphicError):
    code = "not-positive-definite"


class InfeasibleProgramError(HolomorphicError):
    code = "infeasible-program"


class NoConvergenceError(HolomorphicError):
    code = "no-convergence"


class OracleTooLargeError(HolomorphicError):
    code = "oracle-too-large"


class MarginInfeasibleError(HolomorphicError):
    code = "margin-infeasible"


class InternalError(HolomorphicError):
    code = "internal-error"


class ResolutionInsufficientError(HolomorphicError):
    code = "resolution-insufficient"


class BoundaryConditionError(HolomorphicError):
    code = "boundary-condition-violated"


class UndefinedMetricError(HolomorphicError):
    code = "undefined-metric"


class StageError(HolomorphicError):
    """Falha de uma etapa de experimento; guarda o erro original e o nome da etapa."""
    code = "stage-failure"

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"Etapa '{stage}' falhou: {cause}")
        self.stage = stage
        self.cause = cause

    def to_payload(self) -> Dict[str, Any]:
        if isinstance(self.cause, HolomorphicError):
            payload = self.cause.to_payload()
        else:
            payload = {"success": False, "error": str(self.cause), "code": InternalError.code}
        payload["stage"] = self.stage
        return payload


def error_code(exc: Optional[BaseException]) -> str:
    """Retorna o código de um erro (ou 'internal-error' para exceções externas)."""
    if isinstance(exc, HolomorphicError):
        return exc.code
    return InternalError.code
