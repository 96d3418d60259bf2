"""Recognise temporal compositions of actions with (probabilistic) automata.

Patterns are regular expressions over *sets* of primitive actions.  They
compile to minimal DFAs that score streams of per-frame classifier
probabilities either deterministically (threshold and run) or
probabilistically (smoothed probabilistic automaton marginalised over
symbol uncertainty).
"""

__version__ = "0.1.0"

from .automata import Dfa, compile_pattern, distances, export_dot
from .detscore import DeterministicScorer, Video, det_score, simulate, threshold_frame
from .eval import auc, average_precision, map_over_queries
from .pattern import Vocabulary, desugar, format_pattern, parse, wrap_untrimmed
from .probscore import EmissionParams, Pa, ProbabilisticScorer, build_pa, match_prob

__all__ = [
    "Dfa",
    "DeterministicScorer",
    "EmissionParams",
    "Pa",
    "ProbabilisticScorer",
    "Video",
    "Vocabulary",
    "auc",
    "average_precision",
    "build_pa",
    "compile_pattern",
    "desugar",
    "det_score",
    "distances",
    "export_dot",
    "format_pattern",
    "map_over_queries",
    "match_prob",
    "parse",
    "simulate",
    "threshold_frame",
    "wrap_untrimmed",
]
