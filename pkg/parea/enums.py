from enum import Enum, EnumMeta


class MetaEnum(EnumMeta):
    def __contains__(cls, item):
        return cls.has_value(item)


class UIntEnum(Enum, metaclass=MetaEnum):

    @classmethod
    def has_value(cls, value):
        try:
            cls(value)
        except ValueError:
            return False
        else:
            return True


class Layout(UIntEnum):
    """Lattice a field is sampled on.

    ``NODE`` holds the ``nx`` by ``ny`` interior nodes with an implicit zero
    closure outside. ``FLUX`` holds the ``nx+1`` by ``ny+1`` forward-difference
    points, i.e. the interior nodes plus the lower and left boundary frame.
    """
    NODE = 0
    FLUX = 1


class NormKind(UIntEnum):
    L2_GRID = 0


class ReferenceMode(UIntEnum):
    """What perturbed solutions of a sweep are compared against."""
    EXACT = 0
    ZERO_NOISE = 1

    @classmethod
    def from_name(cls, name: str) -> "ReferenceMode":
        try:
            return cls[name.upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown reference mode {name!r}") from None
