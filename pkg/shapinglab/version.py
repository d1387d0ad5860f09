"""
ShapingLab version info.

@author: rookielittleblack
@date:   2025-09-02
"""
__version__ = '0.1.0'
