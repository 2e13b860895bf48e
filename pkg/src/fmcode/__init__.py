"""In-air-handwriting login framework.

Signals written in the air (or on a pointer canvas) are preprocessed,
aligned to per-account templates with DTW, scored by an ensemble of
linear SVMs over temporal local distance features, and indexed by a 1D
convolutional network for fast account lookup.
"""

__version__ = "0.1.0"
