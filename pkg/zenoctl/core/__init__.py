"""Core zeno-control functionality"""
