"""Algorithm identifiers and their families."""
import enum


class Variant(str, enum.Enum):
    GS = "GS"
    WEIGHTED_GS = "WeightedGS"
    LIU_TAGHIZADEH = "LiuTaghizadeh"
    DIRECT_SEARCH = "DirectSearch"
    SIMULATED_ANNEALING = "SimulatedAnnealing"
    OSPR = "OSPR"
    ADAPTIVE_OSPR = "AdaptiveOSPR"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        for member in cls:
            if str(value).lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ValueError(f"unknown algorithm variant {value!r}")

    @property
    def family(self) -> str:
        return FAMILY[self]


FAMILY = {
    Variant.GS: "ifta",
    Variant.WEIGHTED_GS: "ifta",
    Variant.LIU_TAGHIZADEH: "ifta",
    Variant.DIRECT_SEARCH: "search",
    Variant.SIMULATED_ANNEALING: "search",
    Variant.OSPR: "timeavg",
    Variant.ADAPTIVE_OSPR: "timeavg",
}

FAMILY_MEMBERS = {
    "ifta": (Variant.GS, Variant.WEIGHTED_GS, Variant.LIU_TAGHIZADEH),
    "search": (Variant.DIRECT_SEARCH, Variant.SIMULATED_ANNEALING),
    "timeavg": (Variant.OSPR, Variant.ADAPTIVE_OSPR),
}
