"""zenoctl tests"""
