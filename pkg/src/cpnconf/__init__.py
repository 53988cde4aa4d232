"""Conformance checking of object-centric event logs against colored Petri nets."""

from .diagnostics import DiagnosticsSummary, aggregate, to_dot
from .eventlog import EventLog, EventRecord, ObjectState, Trace, check_syntactic_correctness, distinct_objects, read_log, write_log
from .expr import parse_expression
from .modelfile import cpn_from_dict, cpn_to_dict, load_model, save_model
from .net import CPN, Color, DataDomain, Marking, Place, Transition, enabled, fire
from .replay import DeviationKind, DeviationRecord, ReplayCounters, ReplayResult, fitness, replay_log, replay_trace
from .rules import LocalRule, PriorityRule, check_priority
from .trading import SimConfig, build_reference_model, generate_log, simulate
from .validation import ValidationReport, validate_conservative_workflow, validate_syntax

__version__ = "0.1.0"
