"""Symbol tables with role tags."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

ROLES = (
    "time",
    "coordinate",
    "velocity",
    "derivative",
    "constant",
    "parameter",
    "function",
    "branch",
    "auxiliary",
)

TIME = "t"

_COPY = re.compile(r"^(?P<base>.+)_\((?P<idx>\d+)\)$")


def copy_name(base: str, index: int) -> str:
    """Name of copy ``index`` of ``base`` on a replicated space."""
    return f"{base}_({index})"


def split_copy(name: str) -> tuple[str, int | None]:
    m = _COPY.match(name)
    if m is None:
        return name, None
    return m.group("base"), int(m.group("idx"))


@dataclass(frozen=True)
class SymbolTable:
    """Ordered, role-tagged names. Immutable; ``with_`` helpers return copies."""

    entries: tuple[tuple[str, str], ...] = ()
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        idx = {}
        times = 0
        for name, role in self.entries:
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r} for {name!r}")
            if name in idx:
                raise ValueError(f"duplicate symbol {name!r}")
            if role == "time":
                times += 1
                if name != TIME:
                    raise ValueError(f"the time symbol must be named {TIME!r}")
            idx[name] = role
        if times > 1:
            raise ValueError("more than one time symbol")
        object.__setattr__(self, "_index", idx)

    @classmethod
    def build(cls, time: bool = True, **roles: Iterable[str]) -> "SymbolTable":
        """``SymbolTable.build(coordinate=["x"], velocity=["v"], parameter=["b0"])``."""
        entries: list[tuple[str, str]] = [(TIME, "time")] if time else []
        for role in ROLES:
            for name in roles.get(role, ()):
                entries.append((name, role))
        unknown = set(roles) - set(ROLES)
        if unknown:
            raise ValueError(f"unknown roles {sorted(unknown)}")
        return cls(tuple(entries))

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[str]:
        return (n for n, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def role(self, name: str) -> str:
        return self._index[name]

    def names(self, *roles: str) -> tuple[str, ...]:
        if not roles:
            return tuple(self)
        return tuple(n for n, r in self.entries if r in roles)

    @property
    def has_time(self) -> bool:
        return TIME in self._index

    def extend(self, entries: Iterable[tuple[str, str]]) -> "SymbolTable":
        new = [e for e in entries if e[0] not in self._index]
        return SymbolTable(self.entries + tuple(new))

    def merge(self, other: "SymbolTable") -> "SymbolTable":
        for n, r in other.entries:
            if n in self._index and self._index[n] != r:
                raise ValueError(f"symbol {n!r} has conflicting roles {self._index[n]!r} and {r!r}")
        return self.extend(other.entries)
