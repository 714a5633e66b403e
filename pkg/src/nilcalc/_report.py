"""Small uniform result record shared by the verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional


@dataclass
class Report:
    ok: bool
    check: str
    failure: Optional[str] = None
    witness: Any = None
    data: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls, check: str, **data) -> "Report":
        return cls(True, check, data=data)

    @classmethod
    def failed(cls, check: str, failure: str, witness: Any = None, **data) -> "Report":
        return cls(False, check, failure, witness, data)
