"""Error types.  Every error carries a stable machine-readable code that the
HTTP layer and the CLI map to status codes / exit codes."""

from __future__ import annotations


class HandbookError(Exception):
    code = "INTERNAL"

    def __init__(self, message: str = "", *, details: object = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_dict(self) -> dict:
        body = {"code": self.code, "message": self.message}
        if self.details is not None:
            body["details"] = self.details
        return body


class ValidationFailed(HandbookError):
    code = "VALIDATION_FAILED"


class DanglingReference(HandbookError):
    code = "DANGLING_REFERENCE"


class NotFound(HandbookError):
    code = "NOT_FOUND"


class StaleVersion(HandbookError):
    code = "STALE_VERSION"


class Referenced(HandbookError):
    code = "REFERENCED"


class Forbidden(HandbookError):
    code = "FORBIDDEN"


class ForbiddenFrozen(HandbookError):
    code = "FORBIDDEN_FROZEN"


class Duplicate(HandbookError):
    code = "DUPLICATE"


class KindMismatch(HandbookError):
    code = "KIND_MISMATCH"


class InvalidState(HandbookError):
    code = "INVALID_STATE"


class AuthFailed(HandbookError):
    code = "AUTH_FAILED"


class UnknownKind(HandbookError):
    code = "UNKNOWN_KIND"


class StoreNotEmpty(HandbookError):
    code = "STORE_NOT_EMPTY"


class StoreLocked(HandbookError):
    code = "STORE_LOCKED"


class ConfigInvalid(HandbookError):
    code = "CONFIG_INVALID"
