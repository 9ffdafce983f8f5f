"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class NoDataError(ValueError):
    """Every observation needed for a statistic was censored or degenerate."""


class ConfigError(ValueError):
    """An experiment configuration failed validation.

    ``diagnostics`` holds one message per offending field.
    """

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
