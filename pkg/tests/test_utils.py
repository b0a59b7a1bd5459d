import time

from utils.event_bus import OUTPUT_WRITTEN, SCENARIO_STARTED, EventBus
from utils.parallel import ordered_map


def test_publish_counts_successful_handlers():
    bus = EventBus()
    received = []
    bus.register(SCENARIO_STARTED, received.append)
    bus.register(SCENARIO_STARTED, lambda data: 1 / 0)
    bus.register(SCENARIO_STARTED, lambda data: received.append(data["name"]))

    assert bus.publish(SCENARIO_STARTED, {"name": "s"}) == 2
    assert received == [{"name": "s"}, "s"]
    assert bus.publish(OUTPUT_WRITTEN, {}) == 0


def test_unregister():
    bus = EventBus()
    handler = lambda data: None  # noqa: E731
    bus.register(SCENARIO_STARTED, handler)
    assert bus.unregister(SCENARIO_STARTED, handler)
    assert not bus.unregister(SCENARIO_STARTED, handler)
    assert not bus.unregister(OUTPUT_WRITTEN, handler)
    assert bus.publish(SCENARIO_STARTED) == 0


def test_ordered_map_keeps_input_order():
    def slow_square(x):
        time.sleep(0.001 * (10 - x))
        return x * x

    assert ordered_map(slow_square, range(10), threads=4) == [x * x for x in range(10)]
    assert ordered_map(slow_square, range(10)) == [x * x for x in range(10)]
    assert ordered_map(slow_square, [], threads=4) == []
