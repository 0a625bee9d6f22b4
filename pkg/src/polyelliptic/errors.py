"""Exception types raised by the coordinate library."""


class PolyellipticError(Exception):
    """Base class for all library errors."""


class DegenerateGeometry(PolyellipticError, ValueError):
    pass


class Unsupported(PolyellipticError, ValueError):
    pass


class WrongSide(PolyellipticError, ValueError):
    """Point lies in the half-plane not covered by a chart's polarity."""


class OutOfDomain(PolyellipticError, ValueError):
    pass


class OutOfRange(PolyellipticError, ValueError):
    pass


class ProtectedRegion(PolyellipticError, ValueError):
    """Point lies inside or on the polygon, where the common system is undefined."""


class NoConvergence(PolyellipticError, RuntimeError):
    pass


class BoundaryPoint(PolyellipticError, ValueError):
    pass


class SeparabilityFailure(PolyellipticError, RuntimeError):
    pass


class ConvergenceFailure(PolyellipticError, RuntimeError):
    pass


class ConfigError(PolyellipticError, ValueError):
    pass
