"""
Pipelines module initialization

@author: rookielittleblack
@date:   2025-09-02
"""
from .xtransmit_pipe import XTransmitPipe
from .xlink_pipe import XLinkPipe


__all__ = [
    'XTransmitPipe',
    'XLinkPipe',
]
