"""Contraction coefficients, zero-pattern checks and Doeblin certificates"""
