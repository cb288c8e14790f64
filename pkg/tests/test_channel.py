"""
Test for quantlqg/simulate/channel.py
"""

import pytest

from quantlqg import ChannelMessage, TimeDesyncError
from quantlqg.simulate import DelayChannel, channel_deliver


@pytest.mark.channel
def test_out_of_order_delivery():
    delays = (1, 2, 3)
    theta = [2, 0, 0, 1, 0]
    channel = DelayChannel(horizon=5)
    delivered = []
    for t, i in enumerate(theta):
        channel.send(ChannelMessage.send(i, 0, t, delays))
        delivered.append([m.origin_time for m in channel_deliver(channel, t)])
    assert delivered == [[], [], [1], [0, 2], []]

    # Origins 3 and 4 are due at 5, past the horizon.
    assert len(channel) == 2
    assert [m.origin_time for m in channel.dropped] == [3, 4]


@pytest.mark.channel
def test_pending_order():
    channel = DelayChannel()
    channel.send(ChannelMessage(arrival_time=4, origin_time=1,
                                quantizer_index=2, cell_index=0))
    channel.send(ChannelMessage(arrival_time=4, origin_time=0,
                                quantizer_index=2, cell_index=0))
    channel.send(ChannelMessage(arrival_time=2, origin_time=1,
                                quantizer_index=0, cell_index=1))
    pending = [(m.arrival_time, m.origin_time) for m in channel.pending]
    assert pending == [(2, 1), (4, 0), (4, 1)]
    assert channel.dropped == []

    assert channel.deliver(2)[0].cell_index == 1
    assert channel.deliver(3) == []
    assert [m.origin_time for m in channel.deliver(4)] == [0, 1]
    assert len(channel) == 0


@pytest.mark.channel
def test_channel_time_checks():
    channel = DelayChannel()
    channel.deliver(0)
    with pytest.raises(TimeDesyncError):
        channel.deliver(0)
    with pytest.raises(TimeDesyncError):
        channel.send(ChannelMessage(arrival_time=0, origin_time=0,
                                    quantizer_index=0, cell_index=0))

    # A message due at 1 that is skipped over is an error.
    channel.send(ChannelMessage(arrival_time=1, origin_time=1,
                                quantizer_index=0, cell_index=0))
    with pytest.raises(TimeDesyncError):
        channel.deliver(2)
