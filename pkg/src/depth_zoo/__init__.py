"""

The file is mandatory for build system to find the package.
"""

from depth_zoo.__about__ import __version__

__all__ = ["__version__"]
