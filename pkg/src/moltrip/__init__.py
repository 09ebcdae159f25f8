"""moltrip: round-trip molecule-text alignment machinery.

SMILES chemistry (parsing, validity, canonical form), multi-fingerprint
reconstruction scoring, GRPO policy-gradient math, a brute-force verifier
for the round-trip mutual-information bound, policy adapters, and a
desk-scale coupled training harness.
"""

from __future__ import annotations

from . import chem

__version__ = "0.1.0"

__all__ = ["chem", "__version__"]
