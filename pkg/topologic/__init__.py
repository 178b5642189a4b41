"""
Knowledge and effort over subset spaces: model checking, splittings,
bounded decision, normal forms, frames and algebras.
"""

__version__ = "0.1"
