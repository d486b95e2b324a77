"""Java-subset teaching language: lexer, parser, printer, interpreter."""
from .interp import DEFAULT_STEP_LIMIT, ExecOutcome, execute
from .lexer import LexError, Token, canonical_text, reassemble, tokenize
from .parser import ParseError, parse, parse_source
from .printer import pretty
from .problems import (Problem, Signature, TestCase, TestCaseMask, load_problem,
                       load_problems, mask_for_source, run_tests, save_problems, try_parse)
from .values import Array, Char

__all__ = [
    "Array", "Char", "DEFAULT_STEP_LIMIT", "ExecOutcome", "LexError", "ParseError",
    "Problem", "Signature", "TestCase", "TestCaseMask", "Token", "canonical_text",
    "execute", "load_problem", "load_problems", "mask_for_source", "parse",
    "parse_source", "pretty", "reassemble", "run_tests", "save_problems", "tokenize",
    "try_parse",
]
