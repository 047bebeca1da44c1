"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config file failed to parse or violates its schema."""


class HwValidationError(ValueError):
    """A hardware design point failed structural validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SpaceTooLargeError(ValueError):
    """Exhaustive search was asked to enumerate an oversized space."""
