"""Resource budgeting for potentially expensive exact computations.

A single process-wide step counter guards unbounded searches (simplex
pivots, elimination blow-ups, point enumerations, refinement loops).
The limit defaults to a generous constant and can be overridden with the
``TOROCOMB_BUDGET`` environment variable (a positive integer; ``0`` means
unlimited).  Exhausting the budget raises :class:`BudgetExceeded`, which
the command-line tool reports as exit code 3.
"""

from __future__ import annotations

import contextlib
import os

DEFAULT_BUDGET = 100_000_000

_UNSET = object()


class BudgetExceeded(Exception):
    """A bounded search exceeded its configured step budget."""


class _State:
    __slots__ = ("limit", "used")

    def __init__(self) -> None:
        self.limit = _UNSET
        self.used = 0


_state = _State()


def _env_limit() -> int | None:
    raw = os.environ.get("TOROCOMB_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"TOROCOMB_BUDGET must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError(f"TOROCOMB_BUDGET must be nonnegative, got {value}")
    return None if value == 0 else value


def limit() -> int | None:
    """Current step limit (None = unlimited)."""
    if _state.limit is _UNSET:
        _state.limit = _env_limit()
    return _state.limit


def used() -> int:
    """Steps charged so far."""
    return _state.used


def reset(new_limit: int | None | object = _UNSET) -> None:
    """Zero the counter; optionally set a new limit (None = unlimited,
    omitted = re-read the environment)."""
    _state.used = 0
    _state.limit = _env_limit() if new_limit is _UNSET else new_limit


def charge(n: int = 1, what: str = "search steps") -> None:
    """Consume ``n`` steps, raising :class:`BudgetExceeded` past the limit."""
    _state.used += n
    lim = limit()
    if lim is not None and _state.used > lim:
        raise BudgetExceeded(f"exceeded budget of {lim} {what} (used {_state.used})")


def affordable(n: int) -> bool:
    """Whether ``n`` more steps would stay within the limit (without charging)."""
    lim = limit()
    return lim is None or _state.used + n <= lim


@contextlib.contextmanager
def scoped(new_limit: int | None):
    """Temporarily replace both the limit and the counter."""
    old_limit, old_used = _state.limit, _state.used
    _state.limit, _state.used = new_limit, 0
    try:
        yield
    finally:
        _state.limit, _state.used = old_limit, old_used
