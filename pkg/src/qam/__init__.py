"""Quantum abstract machine: terms, rewriting, monitors, routing and compilation."""
from .terms import *  # noqa: F401,F403
from .meet import MeetResult, is_normal, meet, normalize  # noqa: F401
from .engine import Budget, LtsGraph, Rule, Transition, apply, enumerate_transitions, explore  # noqa: F401
from .syntax import ParseError, ProtocolFile, parse, print_protocol  # noqa: F401

__version__ = "0.1.0"
