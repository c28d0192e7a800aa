"""
Fair PPRL
Privacy-preserving record linkage with fairness- and cost-constrained differentially private blocking.
"""

__version__ = "1.1.0"
