"""Static analyzer and refactoring tool for TensorFlow hybridization decorators.

Analyzes a whole Python project, decides per function whether adding or
removing the graph-execution decorator is safe and potentially profitable,
and emits the corresponding source edits as a unified diff or in-place
rewrite, together with a machine-readable report.
"""

__version__ = "0.1.0"
