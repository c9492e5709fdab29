DEFAULT_LM_HIDDEN_SIZE = 32
DEFAULT_LM_WEIGHT = 1.0

# one-hot input index 0 is the start marker; output index 0 is the end marker
START = 0
END = 0
