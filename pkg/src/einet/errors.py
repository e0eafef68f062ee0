"""Exception types shared across the package."""


class EINetError(Exception):
    """Base class for all einet errors."""


class NotHyperbolic(EINetError):
    """Base matrix is not a hyperbolic toral automorphism (|trace| <= 2 or |det| != 1)."""


class InfeasibleGeometry(EINetError):
    """Requested rotation-map geometry cannot be realized (arcs do not fit, or
    the connector slope floor is incompatible with the required rise)."""


class NonConvergence(EINetError):
    """Numerical integrator exceeded its step budget or failed to converge."""


class OnSingularity(EINetError):
    """Tangent-map evaluation requested at a point of the singularity set
    (a fiber coordinate at a pole, or the base x-coordinate at a rotation-map
    breakpoint, within tolerance)."""


class SchemaError(EINetError):
    """Configuration document is malformed or has the wrong schema version."""
