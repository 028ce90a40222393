"""Exception hierarchy shared by the simulator and the harness."""


class NLWError(Exception):
    """Base class for every error raised deliberately by nlwave."""


class BlowUpError(NLWError):
    """A physical value of the discrete solution became non-finite."""

    def __init__(self, message, time=None, member=None):
        super().__init__(message)
        self.time = time
        self.member = member

    def __str__(self):
        msg = super().__str__()
        if self.time is not None:
            msg += f" (t={self.time:.6g})"
        if self.member is not None:
            msg += f" (member {self.member})"
        return msg


class DissipationViolated(NLWError):
    """The nonlinearity fails liminf f'(s) > -lambda_1."""


class InsufficientResolution(NLWError):
    """Too few time samples to form the requested quadrature."""


class DegenerateError(NLWError):
    """Both trajectories coincide, so a ratio or fit is undefined."""


class DomainError(NLWError):
    """An argument lies outside the domain of a closed-form expression."""


class LemmaDomainError(DomainError):
    """Zero vector passed to the monotonicity inequality with exponent < 2."""


class ConfigError(NLWError):
    """Base class for configuration problems; carries the offending key."""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


class ParseError(ConfigError):
    pass


class ConstraintViolation(ConfigError):
    pass
