DEFAULT_SAMPLE_RATE_HZ = 8000.0
DEFAULT_FRAME_MS = 20.0
DEFAULT_CUTOFF_HZ = 4000.0

# log(magnitude + LOG_FLOOR) keeps silent frames finite
LOG_FLOOR = 1e-10
VARIANCE_FLOOR = 1e-8

WINDOWS = ('rect', 'hann')

# 16-bit signed PCM full scale
PCM_SCALE = 32768.0
