"""
cfgevade: explainability-guided white-box evasion of CFG-based malware classifiers.

Pipeline: CFG JSON -> DFS call sequence -> wordpiece tokens -> transformer
classifier -> integrated gradients -> iterative function-rename attack.
"""
__version__ = "0.1.0"
