"""Exception hierarchy shared by every subpackage."""


class PatSwarmError(Exception):
    pass


class NearFieldError(PatSwarmError, ValueError):
    """Query point closer than the guard radius to a transducer centre."""


class GeometryError(PatSwarmError, ValueError):
    """Invalid array, pose or grid geometry."""


class SolverError(PatSwarmError, ValueError):
    """A focusing/levitation solver rejected its inputs."""


class ConfigError(PatSwarmError, ValueError):
    """A configuration document failed to parse or validate.

    ``line`` is 1-based when the problem could be anchored to the source text.
    """

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(message)

    def diagnostic(self):
        where = str(self.path) if self.path is not None else "<config>"
        if self.line is not None:
            where += f":{self.line}"
            if self.column is not None:
                where += f":{self.column}"
        return f"{where}: {self.args[0]}"


class RosterError(PatSwarmError, ValueError):
    """Scenario roster does not meet the scenario's minimum."""


class ScheduleError(PatSwarmError, ValueError):
    """A levitation schedule cannot be built from the current registry."""
