"""Per-user session state: map focus, bounded chat history, suggestion cursor."""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .navigation import FocusState

HISTORY_TURNS_PER_SIDE = 10


@dataclass(frozen=True)
class Turn:
    role: str  # "user" | "assistant"
    text: str
    metric_key: Optional[str] = None
    region_id: Optional[str] = None


@dataclass
class SessionState:
    session_id: str
    focus: Optional[FocusState] = None
    history: deque[Turn] = field(
        default_factory=lambda: deque(maxlen=2 * HISTORY_TURNS_PER_SIDE)
    )
    suggestion_cursor: int = 0
    created: float = field(default_factory=time.time)
    last_active: float = field(default_factory=time.time)

    def append_turn(self, turn: Turn) -> None:
        self.history.append(turn)
        self.last_active = time.time()

    def recent_metric(self) -> Optional[str]:
        for turn in reversed(self.history):
            if turn.metric_key:
                return turn.metric_key
        return None

    def recent_region(self) -> Optional[str]:
        for turn in reversed(self.history):
            if turn.region_id:
                return turn.region_id
        return None
