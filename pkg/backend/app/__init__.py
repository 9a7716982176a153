"""
FracAAA Application Package
"""
