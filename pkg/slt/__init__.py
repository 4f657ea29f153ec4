"""
SLT - simulation and numerical verification of local times of marked stable Levy processes
"""

__version__ = "0.1.0"
