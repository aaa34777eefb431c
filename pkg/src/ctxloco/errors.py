"""Exception types shared across the package."""


class CtxlocoError(Exception):
    """Base class for package errors."""


class ConfigError(CtxlocoError):
    """Invalid run configuration (bad budget, missing policy, bad paths)."""


class BackendError(CtxlocoError):
    """Chat-completion backend unreachable or failing after retries."""


class TranslationError(CtxlocoError):
    """Description could not be turned into property levels."""


class ParseError(TranslationError):
    """Backend response did not contain the required answer lines."""

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__(f"response missing properties: {', '.join(self.missing)}")
