"""Hybrid quantum-classical binary classifiers for noisy non-convex datasets.

Submodules: ``simcore`` (statevector simulator), ``qgrad`` (parameter-shift
gradients), ``nn`` (dense layers, BCE, Adam), ``qmodels`` (architectures and
training), ``data``, ``metrics``, ``baselines``, ``config``/``sweep``/``cli``
(experiment runner).
"""

__version__ = "0.1.0"
