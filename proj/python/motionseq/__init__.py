"""Residual seq2seq GRU for short-term human motion prediction."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
