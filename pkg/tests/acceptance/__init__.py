"""Table reproductions with full optimizations"""
