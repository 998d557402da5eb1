"""Monte Carlo coupling of a hidden game with its abstract game"""
