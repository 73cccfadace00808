class HeightgenError(Exception):
    """Any failure raised by this package on purpose."""
