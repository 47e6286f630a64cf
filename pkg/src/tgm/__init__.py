"""Schema mediation over typed graphs.

Import heterogeneous sources into typed graph schemas, match and map them
onto a mediated target, check integration quality and execute the mapping
over instance data.
"""

__version__ = "0.1.0"
