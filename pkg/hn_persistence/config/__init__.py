"""Configuration modules for HN computations"""
