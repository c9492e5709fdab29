BLANK = 0

# 26 letters plus space; phoneme inventories load from alphabet files instead
DEFAULT_SYMBOLS = 'ABCDEFGHIJKLMNOPQRSTUVWXYZ '
SPACE_TOKEN = '<space>'

# exhaustive oracle limits
BRUTEFORCE_MAX_FRAMES = 8
BRUTEFORCE_MAX_SYMBOLS = 4
