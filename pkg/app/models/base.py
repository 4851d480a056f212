import enum
from enum import Enum
from typing import List, Type


class NetworkModel(enum.Enum):
    er = "er"
    geo = "geo"


class SolverName(enum.Enum):
    sp = ("sp", 1)
    bp = ("bp", 2)
    mnf = ("mnf", 3)
    pmnf = ("pmnf", 4)
    random = ("random", 5)

    def __new__(cls, value: str, code: int):
        obj = object.__new__(cls)
        obj._value_ = value
        # stable tag mixed into per-solver seeds
        obj.code = code
        return obj


class GreedyOrder(enum.Enum):
    static_degree = "static_degree"
    progressive_degree = "progressive_degree"
    random = "random"


class Provenance(enum.Enum):
    sp_bias = "sp_bias"
    forced = "forced"
    greedy_fallback = "greedy_fallback"
    restart = "restart"
    baseline = "baseline"


class DeltaMode(enum.Enum):
    exact = "exact"
    sampled = "sampled"


def get_enum_values(enum_cls: Type[Enum]) -> List[str]:
    """
    Retrieves the string values of all members of the given Enum class.

    Args:
        enum_cls (Type[Enum]): The Enum class to process.

    Returns:
        List[str]: A list of string values for the Enum members.
    """
    return [member.value for member in enum_cls]
