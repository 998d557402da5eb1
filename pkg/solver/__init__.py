"""Matrix games and finite zero-sum stochastic game solvers"""
