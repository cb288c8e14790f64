"""
The delay channel between the sensor and the controller.
"""

import heapq
import logging

from ..errors import TimeDesyncError

logger = logging.getLogger(__name__)


class DelayChannel:
    """A priority queue of messages keyed by (arrival time, origin time).

    Messages due at or after `horizon` are accepted (their price is paid
    when sent) but are never delivered.

    Args:
        horizon (int): The first time at which nothing is delivered any
            more (default=None, unbounded).
    """

    def __init__(self, horizon=None):
        self.__pending = []
        self.__horizon = horizon
        self.__clock = -1

    def __len__(self):
        return len(self.__pending)

    @property
    def pending(self):
        """The messages still in flight, in delivery order."""
        return sorted(self.__pending)

    @property
    def dropped(self):
        """The in-flight messages that arrive at or after the horizon."""
        if self.__horizon is None:
            return []
        return [m for m in self.pending if m.arrival_time >= self.__horizon]

    def send(self, msg):
        """Puts a message in flight."""
        if msg.arrival_time <= self.__clock:
            raise TimeDesyncError(
                f'Message due at {msg.arrival_time} sent after delivery '
                f'time {self.__clock};'
            )
        heapq.heappush(self.__pending, msg)

    def deliver(self, t):
        """Removes and returns the messages due at t, by origin time."""
        if t <= self.__clock:
            raise TimeDesyncError(
                f'Channel already delivered at t={self.__clock}, asked t={t};'
            )
        self.__clock = t
        due = []
        while self.__pending and self.__pending[0].arrival_time <= t:
            msg = heapq.heappop(self.__pending)
            if msg.arrival_time < t:
                raise TimeDesyncError(
                    f'Message due at {msg.arrival_time} was never delivered;'
                )
            due.append(msg)
        return due


def channel_deliver(queue, t):
    """Returns exactly the messages of the queue due at t.

    Simultaneous arrivals come sorted by origin time.

    Args:
        queue (DelayChannel): The channel.
        t (int): The delivery time.

    Returns:
        messages (list): The delivered `ChannelMessage` items.
    """
    return queue.deliver(t)
