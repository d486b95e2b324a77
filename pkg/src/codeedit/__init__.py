"""Contrastive code-edit embeddings for next-step programming feedback.

Subpackages: ``minilang`` (teaching language and test runner), ``corpus``
(submissions, pairs, quadruples), ``embedder`` (model and training),
``codebleu``, ``suggest`` and ``cluster``; ``cli`` wires them together.
"""
__version__ = "0.1.0"
