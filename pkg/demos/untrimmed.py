"""
Finding a pattern inside a longer video
=======================================

Real clips are rarely cut to the action.  Wrapping a pattern as
``. * PATTERN . *`` lets it match anywhere.
"""

from actionre.experiment import evaluate_dataset
from actionre.synth import ExprParams, make_dataset

kw = dict(n_expressions=10, n_positive=10, noise=0.3, seed=4)
trimmed = make_dataset(ExprParams(), **kw)
padded = make_dataset(ExprParams(), pad_factor=3, **kw)
print("clip length", len(trimmed.queries[0].videos[0]), "->", len(padded.queries[0].videos[0]))

hypers = {"alpha": 1e-3, "gamma": 1.0}
print("trimmed, plain pattern  ", evaluate_dataset(trimmed, "probabilistic", hypers))
print("padded, plain pattern   ", evaluate_dataset(padded, "probabilistic", hypers))
print("padded, wrapped pattern ", evaluate_dataset(padded, "probabilistic", hypers, untrimmed=True))
