"""Discrete approximation of pushforward measures with certified Wasserstein bounds."""

from ._wprop import *  # noqa: F401,F403
from ._wprop import __doc__  # noqa: F401
