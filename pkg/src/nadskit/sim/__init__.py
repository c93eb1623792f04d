"""Discrete-event simulation of the switched in-vehicle backbone."""
