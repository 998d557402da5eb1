"""End-to-end approximation of the uniform value"""
