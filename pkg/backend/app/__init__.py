# Empty __init__.py to make app a package
__version__ = "1.0.0"
