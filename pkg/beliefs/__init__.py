"""Belief updates, forward products and exact small-horizon oracles"""
