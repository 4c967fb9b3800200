"""Simulator and control stack for a swarm of mobile ultrasonic phased-array robots."""

__version__ = "0.1.0"
