"""Hidden stochastic game definitions, validation, fixtures and file I/O"""
