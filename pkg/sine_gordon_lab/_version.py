"""Version information for the sine-Gordon lab package.

The string is rewritten at build time by poetry-dynamic-versioning and is
recorded in every run manifest.

Example:
    >>> from sine_gordon_lab import __version__
    >>> print(__version__)
    '0.0.0.dev'
"""

__version__ = "0.0.0.dev"
