"""
Performance tests package for Bank Account API.
"""
