"""
Operators module initialization

Stage operators of a link experiment: transmitter, selector, fiber channel
and receiver. All classes can be imported directly from this module.

@author: rookielittleblack
@date:   2025-09-02
"""
from .xtransmitter import XTransmitter, channel_seed
from .xselector import XSelector
from .xfiber_channel import XFiberChannel
from .xreceiver import XReceiver


# Export all classes for easy importing
__all__ = [
    'XTransmitter',
    'XSelector',
    'XFiberChannel',
    'XReceiver',
    'channel_seed',
]
