"""Exception hierarchy shared across the package."""


class ScplError(Exception):
    pass


class ScplSyntaxError(ScplError):
    def __init__(self, message, line, col, expected=()):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)


class DuplicateAgent(ScplError):
    pass


class StructureError(ScplError):
    pass


class UniverseTooLarge(ScplError):
    pass


class SilentLoop(ScplError):
    pass


class ConditionFailed(ScplError):
    pass


class NotEnabled(ScplError):
    pass


class SpawnCollision(ScplError):
    pass


class ArithmeticOnNonNumber(ScplError):
    pass


class AutoOracleAmbiguous(ScplError):
    pass


class OracleScriptMismatch(ScplError):
    pass


class ReplayDivergence(ScplError):
    pass


class NotAValidSC(ScplError):
    pass


class SessionClosed(ScplError):
    pass
