from glyphgrid.render import render

BANNER = """
glyphgrid - tiny bitmaps for your terminal
"""
