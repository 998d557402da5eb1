"""Belief grid, projection and the finite abstract stochastic game"""
