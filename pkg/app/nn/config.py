DEFAULT_NUM_LAYERS = 2
DEFAULT_HIDDEN_SIZE = 32

# U(-0.1, 0.1) weights; forget bias 1.0 keeps the cell path open early in training
DEFAULT_INIT_RANGE = 0.1
DEFAULT_FORGET_BIAS = 1.0
