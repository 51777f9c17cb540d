"""Error types shared across the engine.

Every error carries a stable machine-readable ``code`` so the HTTP service
and CLI can surface it without string matching on messages.
"""

from __future__ import annotations


class ProvoxError(Exception):
    """Base class for all engine errors."""

    code = "ProvoxError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- DSL / parsing ---

class PlanSyntaxError(ProvoxError):
    code = "SyntaxError"

    def __init__(self, message: str, position: int, token: str = ""):
        super().__init__(f"{message} at position {position}" + (f" (near {token!r})" if token else ""))
        self.position = position
        self.token = token


class UnknownFunctionError(ProvoxError):
    code = "UnknownFunction"

    def __init__(self, name: str):
        super().__init__(f"unknown function {name!r}")
        self.name = name


class ArityMismatchError(ProvoxError):
    code = "ArityMismatch"

    def __init__(self, name: str, expected: int, got: int):
        super().__init__(f"{name} expects {expected} argument(s), got {got}")
        self.name = name
        self.expected = expected
        self.got = got


class UnknownObjectError(ProvoxError):
    code = "UnknownObject"

    def __init__(self, object_id: str):
        super().__init__(f"unknown object {object_id!r}")
        self.object_id = object_id


# --- registry mutation ---

class DuplicateNameError(ProvoxError):
    code = "DuplicateName"

    def __init__(self, name: str):
        super().__init__(f"function {name!r} already exists")
        self.name = name


class UnknownBodyFunctionError(ProvoxError):
    code = "UnknownBodyFunction"

    def __init__(self, name: str):
        super().__init__(f"body references unknown function {name!r}")
        self.name = name


class UnboundParamError(ProvoxError):
    code = "UnboundParam"

    def __init__(self, param: str):
        super().__init__(f"body references undeclared parameter ${param}")
        self.param = param


class UnreferencedParamError(ProvoxError):
    code = "UnreferencedParam"

    def __init__(self, param: str):
        super().__init__(f"parameter {param!r} is never used in the body")
        self.param = param


class NotFoundError(ProvoxError):
    code = "NotFound"

    def __init__(self, name: str):
        super().__init__(f"no function named {name!r}")
        self.name = name


class BasePrimitiveImmutableError(ProvoxError):
    code = "BasePrimitiveImmutable"

    def __init__(self, name: str):
        super().__init__(f"base primitive {name!r} cannot be changed")
        self.name = name


class ReferencedByOthersError(ProvoxError):
    code = "ReferencedByOthers"

    def __init__(self, name: str, referrers: list[str]):
        super().__init__(f"{name!r} is referenced by: {', '.join(referrers)}")
        self.name = name
        self.referrers = list(referrers)


class CyclicReferenceError(ProvoxError):
    code = "CyclicReference"

    def __init__(self, name: str):
        super().__init__(f"update of {name!r} would create a reference cycle")
        self.name = name


# --- synthesis ---

class NamingFailedError(ProvoxError):
    code = "NamingFailed"


class NameCollisionError(ProvoxError):
    code = "NameCollision"

    def __init__(self, name: str):
        super().__init__(f"could not find a free name for {name!r} (suffixes _2.._9 taken)")
        self.name = name


# --- planner backends ---

class BackendUnavailableError(ProvoxError):
    code = "BackendUnavailable"


class MalformedToolCallError(ProvoxError):
    code = "MalformedToolCall"


class InvalidPlanAfterRetriesError(ProvoxError):
    code = "InvalidPlanAfterRetries"

    def __init__(self, last_error: ProvoxError, attempts: int):
        super().__init__(f"no valid plan after {attempts} attempt(s): {last_error.message}")
        self.last_error = last_error
        self.attempts = attempts


# --- proactive / session ---

class EmptyGoalError(ProvoxError):
    code = "EmptyGoal"

    def __init__(self):
        super().__init__("goal text is empty")


class WrongStateError(ProvoxError):
    code = "WrongState"

    def __init__(self, message: str):
        super().__init__(message)


class SchemaVersionMismatchError(ProvoxError):
    code = "SchemaVersionMismatch"

    def __init__(self, got: object):
        super().__init__(f"unsupported context schema version {got!r}")
        self.got = got


# --- simulator ---

class InvalidSceneError(ProvoxError):
    code = "InvalidScene"

    def __init__(self, message: str):
        super().__init__(message)
