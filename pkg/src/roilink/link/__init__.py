"""Drone-to-ground link: wire protocol, pixel ops, sender and receiver loops."""
