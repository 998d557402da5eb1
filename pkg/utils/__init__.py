"""Configuration, exception types and report writers shared by every package"""
