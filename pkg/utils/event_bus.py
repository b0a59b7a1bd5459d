# utils/event_bus.py
import logging
from typing import Any, Callable, Dict, List

logger = logging.getLogger(__name__)

# Scenario lifecycle events
SCENARIO_STARTED = "scenario_started"
SCENARIO_FINISHED = "scenario_finished"
SCENARIO_FAILED = "scenario_failed"
OUTPUT_WRITTEN = "output_written"
BOUND_VIOLATED = "bound_violated"


class EventBus:
    """
    Publishes scenario lifecycle events to any number of subscribers.

    The CLI subscribes log handlers; tests subscribe collectors. A failing
    handler is logged and never interrupts the computation that published.
    """

    def __init__(self):
        self.handlers: Dict[str, List[Callable[[Any], None]]] = {}

    def register(self, event_type: str, handler: Callable[[Any], None]) -> None:
        """
        Register a handler for an event type.

        Args:
            event_type: One of the module-level event names
            handler: Called with the event payload
        """
        self.handlers.setdefault(event_type, []).append(handler)
        logger.debug(f"Registered handler for event: {event_type}")

    def publish(self, event_type: str, data: Any = None) -> int:
        """
        Publish an event to all registered handlers.

        Args:
            event_type: The event being published
            data: Payload, usually a dict with at least the scenario name

        Returns:
            Number of handlers that ran without raising
        """
        delivered = 0
        for handler in self.handlers.get(event_type, []):
            try:
                handler(data)
                delivered += 1
            except Exception as e:
                logger.error(f"Error in event handler for {event_type}: {e}")
        return delivered

    def unregister(self, event_type: str, handler: Callable[[Any], None]) -> bool:
        """
        Remove a handler.

        Returns:
            True if the handler was registered, False otherwise
        """
        try:
            self.handlers.get(event_type, []).remove(handler)
            return True
        except ValueError:
            return False
