"""
ShapingLab: probabilistic amplitude shaping for nonlinearity tolerance on coherent fiber links.

@author: rookielittleblack
@date:   2025-09-02
"""
from shapinglab.version import __version__

__all__ = ['__version__']
