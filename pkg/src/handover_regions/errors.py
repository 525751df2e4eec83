"""Exception hierarchy shared by all modules."""


class HandoverRegionError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HandoverRegionError, ValueError):
    """Invalid scenario or command-line configuration."""


# topology
class MalformedSpec(ConfigError):
    pass


class DisconnectedGraph(HandoverRegionError):
    pass


class UnknownCell(HandoverRegionError, KeyError):
    pass


# mobility / trace files
class ParseError(HandoverRegionError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonAdjacentHandover(ParseError):
    pass


# protocol
class UnassignedCell(HandoverRegionError):
    pass


class RetiredRegion(HandoverRegionError):
    def __init__(self, region: int):
        super().__init__(f"region {region} is not live")
        self.region = region


# agents
class NoData(HandoverRegionError):
    """Attraction is 0/0: no counted handovers from any live region."""


class NoCandidate(HandoverRegionError):
    pass


class EmptyRegionOverflow(HandoverRegionError):
    pass


class NotAssigned(HandoverRegionError, KeyError):
    pass


# engine / evaluation
class InsufficientCapacity(HandoverRegionError):
    pass


class LastRegion(HandoverRegionError):
    pass


class Infeasible(HandoverRegionError):
    pass


class TooLarge(HandoverRegionError):
    pass


class NotConverged(HandoverRegionError):
    pass
