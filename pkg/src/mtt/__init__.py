"""A small dependent type theory kernel with an elaborator for implicit
arguments, coercions and canonical structures."""

__version__ = "0.1.0"
