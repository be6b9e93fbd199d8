"""Exception types shared across the package."""


class SkirmishError(Exception):
    """Base class for all errors raised by this package."""


class MalformedDocument(SkirmishError):
    """Input text is not well-formed JSON."""


class MissingField(SkirmishError):
    """A required field is absent from a document."""


class InvalidEnum(SkirmishError):
    """A field holds a value outside its allowed set."""


class InvariantViolation(SkirmishError):
    """A parsed value breaks a structural invariant."""


class UnresolvableUnitType(SkirmishError):
    """A unit type reference could not be resolved to a definition."""


class GroupCountMismatch(SkirmishError):
    """Declared unit counts do not match the group totals."""


class TerrainDimensionMismatch(SkirmishError):
    """Terrain grid dimensions disagree with the declared width/height."""


class BadTypeIdMap(SkirmishError):
    """The unit-type id map is inconsistent with num_unit_types or the groups."""


class PlacementOverflow(SkirmishError):
    """A unit group cannot be placed inside the map without overlap."""


class DuplicateId(SkirmishError):
    """An id was added twice to a structure requiring unique ids."""


class UnknownId(SkirmishError):
    """An id was referenced that is not present."""


class UnavailableAction(SkirmishError):
    """An agent chose an action that is masked as unavailable."""


class WrongActionCount(SkirmishError):
    """The number of actions does not match the number of agents."""
