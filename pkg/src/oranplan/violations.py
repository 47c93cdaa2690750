"""Violation records returned by the feasibility checkers."""

from dataclasses import dataclass, field
from typing import Tuple


@dataclass(frozen=True)
class Violation:
    """One broken constraint: which family, which indices, and by how much.

    ``slack`` is negative for inequality violations (amount by which the
    bound is exceeded) and zero for purely structural violations such as a
    duplicated attachment.
    """

    family: str
    indices: Tuple
    slack: float = 0.0
    message: str = ""

    def __str__(self) -> str:
        where = ",".join(str(i) for i in self.indices)
        return f"[{self.family}] ({where}) slack={self.slack:.3e} {self.message}"


def families(violations) -> set:
    return {v.family for v in violations}
