# CPTrap - Python Source Root
"""
Python source root for CPTrap.

Subpackages:
- cptrap: bath susceptivities, master-equation generator, stationary analysis and CLI
"""
