"""
Quantlqg tests.
"""
