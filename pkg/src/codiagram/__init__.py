"""Compile C-O Diagram contracts into networks of timed automata and check them."""
__version__ = "0.1.0"

from .compiler import compile_contract
from .explorer import check, explore, parse_query
from .export import to_dot, to_uppaal_xml
from .frontend import parse_contract, render_contract, validate
from .nta import Nta, from_json, to_json

__all__ = [
    "Nta",
    "check",
    "compile_contract",
    "explore",
    "from_json",
    "parse_contract",
    "parse_query",
    "render_contract",
    "to_dot",
    "to_json",
    "to_uppaal_xml",
    "validate",
]
