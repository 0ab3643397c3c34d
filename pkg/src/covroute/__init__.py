"""Coordinated routing of mission vehicles and mobile coverage emitters."""

__version__ = "0.1.0"
