from .dot import to_dot
from .uppaal import clause_constants, sanitize, to_uppaal_xml, translate_query

__all__ = ["clause_constants", "sanitize", "to_dot", "to_uppaal_xml", "translate_query"]
