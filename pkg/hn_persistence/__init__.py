"""
Harder-Narasimhan Filtrations for Multiparameter Persistence

This package computes HN filtrations, HN types, HN filtered rank invariants,
skyscraper invariants, erosion/HN distances and HN filtered landscapes of
finitely presentable persistence modules over Z^n and R^n, in exact arithmetic.
"""

__version__ = "1.0.0"
