"""Utility modules for file formats and random instances"""
