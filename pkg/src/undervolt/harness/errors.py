class ConfigError(ValueError):
    """Invalid configuration; carries every problem found, not just the first."""

    exit_code = 1

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(ValueError):
    exit_code = 2


class InvariantError(AssertionError):
    exit_code = 3
