"""Post-paste code fix toolkit.

Mines paste-and-fix examples from keystroke-level edit logs, builds
token-budgeted model prompts, encodes and applies delimiter-anchored edit
patches, serves suggestions from pluggable model backends, and computes
the online/offline evaluation metric suite.
"""

__version__ = "0.1.0"
