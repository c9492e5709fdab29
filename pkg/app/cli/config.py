# every number on stdout is printed with 9 significant digits
NUMBER_FORMAT = '.9g'

DEFAULT_AUDIO_SAMPLE_RATE_HZ = 8000.0
DEFAULT_SPECTRUM_DURATION_S = 1.0

DEFAULT_BEAM_WIDTH = 8
DEFAULT_NBEST = 5

DEFAULT_GRADCHECK_TOLERANCE = 1e-3
DEFAULT_GRADCHECK_STEP = 1e-5
DEFAULT_GRADCHECK_SEED = 0
