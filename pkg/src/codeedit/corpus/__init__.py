"""Submission histories, code-edit pairs, quadruples, splits and vocabulary."""
from .data import (DatasetSplit, EditPair, FormatError, InsufficientData, ProblemMismatch,
                   Quadruple, Submission, UnknownProblem, build_edit_pairs, build_quadruples,
                   ingest, ingest_rows, quadruple_from_json, quadruple_to_json, read_jsonl,
                   read_jsonl_meta, read_submission_rows, similarity_label, split_by_student,
                   write_jsonl)
from .synth import ConfigError, SynthConfig, synthesize_corpus
from .vocab import BOS, EOS, PAD, UNK, Vocab, build_vocab, decode, encode

__all__ = [
    "BOS", "ConfigError", "DatasetSplit", "EOS", "EditPair", "FormatError",
    "InsufficientData", "PAD", "ProblemMismatch", "Quadruple", "Submission", "SynthConfig",
    "UNK", "UnknownProblem", "Vocab", "build_edit_pairs", "build_quadruples", "build_vocab",
    "decode", "encode", "ingest", "ingest_rows", "quadruple_from_json", "quadruple_to_json",
    "read_jsonl", "read_jsonl_meta", "read_submission_rows", "similarity_label", "split_by_student",
    "synthesize_corpus", "write_jsonl",
]
