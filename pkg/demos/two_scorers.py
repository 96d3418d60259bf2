"""
Deterministic vs probabilistic scoring
======================================

Detectors give per-frame probabilities rather than clean action sets.  The
deterministic scorer thresholds them and runs the machine; the
probabilistic one keeps the uncertainty and runs a smoothed forward pass.
"""

import numpy as np

from actionre import DeterministicScorer, ProbabilisticScorer, Vocabulary, compile_pattern, parse

vocab = Vocabulary(["a", "b", "c"])
dfa = compile_pattern(parse("{a}+ {b,c}", vocab))

clean = np.array([
    [0.95, 0.02, 0.01],
    [0.90, 0.10, 0.05],
    [0.03, 0.97, 0.92],
])

# One confident miss in the last frame: c drops just under the threshold.
shaky = clean.copy()
shaky[2, 2] = 0.45

det = DeterministicScorer(dfa, tau=0.5)
prob = ProbabilisticScorer(dfa, alpha=1e-3, gamma=1.0)

for name, v in [("clean", clean), ("shaky", shaky)]:
    print(f"{name:6s} det={det(v):.3f}  prob={prob(v):.3f}")

# The deterministic run halts after the {a} loop, one edge short of the
# final state, so it scores 1/2 however many {a} frames it read.  The
# probabilistic score drops by a smaller margin.  Sharper emissions (gamma > 1)
# trust confident detections more.
for gamma in (0.5, 1.0, 2.0):
    print(gamma, ProbabilisticScorer(dfa, alpha=1e-3, gamma=gamma)(shaky))
