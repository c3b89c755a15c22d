"""Event system for decoupled pipeline notifications.

This module provides a publish-subscribe event system that allows the
tracking pipeline to report track lifecycle changes and position updates
without knowing who consumes them (trajectory writer, progress display,
tests).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..logger import get_logger

logger = get_logger(__name__)


class PipelineEventType(Enum):
    """Types of events emitted during a tracking run."""

    # Run lifecycle
    RUN_STARTED = "run_started"
    RUN_COMPLETED = "run_completed"

    # Detection and matching
    KEYFRAME_PROCESSED = "keyframe_processed"
    EVENT_CORNER_MATCHED = "event_corner_matched"

    # Track lifecycle (values match the tracker's transition names)
    TRACK_CREATED = "track_created"
    TRACK_ACTIVATED = "track_activated"
    TRACK_UPDATED = "track_updated"
    TRACK_STALE = "track_stale"
    TRACK_LOST = "track_lost"


@dataclass
class PipelineEvent:
    """An event emitted during a run.

    Attributes:
        event_type: The type of event
        data: Payload; track events carry ``track_id`` and stream time ``t``
    """

    event_type: PipelineEventType
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def track_id(self) -> int | None:
        """Track ID if the event concerns a track."""
        return self.data.get("track_id")

    @property
    def t(self) -> int | None:
        """Stream time in µs, when the event has one."""
        return self.data.get("t")


EventHandler = Callable[[PipelineEvent], None]


class EventBus:
    """Publish-subscribe bus for pipeline events.

    Handlers run synchronously in subscription order, type handlers before
    global ones, so consumers see track updates in stream order. Emitting a
    type nobody listens to costs one lookup; the pipeline emits per update.

    Example:
        >>> bus = EventBus()
        >>> bus.on(PipelineEventType.TRACK_UPDATED, lambda e: rows.append(e.data["record"]))
    """

    def __init__(self) -> None:
        self._by_type: dict[PipelineEventType, list[EventHandler]] = {}
        self._any: list[EventHandler] = []
        self.handler_errors = 0

    @staticmethod
    def _remover(handlers: list[EventHandler], handler: EventHandler) -> Callable[[], None]:
        def unsubscribe() -> None:
            # Repeated calls are no-ops.
            if handler in handlers:
                handlers.remove(handler)

        return unsubscribe

    def on(self, event_type: PipelineEventType, handler: EventHandler) -> Callable[[], None]:
        """Subscribe to one event type.

        Returns:
            Function removing this subscription
        """
        handlers = self._by_type.setdefault(event_type, [])
        handlers.append(handler)
        return self._remover(handlers, handler)

    def on_all(self, handler: EventHandler) -> Callable[[], None]:
        """Subscribe to every event type."""
        self._any.append(handler)
        return self._remover(self._any, handler)

    def has_handlers(self, event_type: PipelineEventType) -> bool:
        return bool(self._any or self._by_type.get(event_type))

    def emit(self, event_type: PipelineEventType, **data: Any) -> None:
        """Deliver an event to its subscribers.

        A failing handler is logged and counted in ``handler_errors``; it
        never stops the run.
        """
        handlers = [*self._by_type.get(event_type, ()), *self._any]
        if not handlers:
            return
        event = PipelineEvent(event_type=event_type, data=data)
        for handler in handlers:
            try:
                handler(event)
            except Exception as e:
                self.handler_errors += 1
                logger.warning("Handler for %s failed at t=%s: %s", event_type.value, event.t, e)

    def clear(self, event_type: PipelineEventType | None = None) -> None:
        """Drop the handlers of one type, or every handler when None."""
        if event_type is None:
            self._by_type.clear()
            self._any.clear()
        else:
            self._by_type.pop(event_type, None)
