"""Core modules for HN computations"""
