# Chord layout: symbol k (0-based position in the alphabet) sounds at
# BASE + SPACING*k and BASE + SPACING*k + PARTNER_OFFSET.
CHORD_BASE_HZ = 300.0
CHORD_SPACING_HZ = 100.0
CHORD_PARTNER_OFFSET_HZ = 57.0
CHORD_AMPLITUDE = 0.4
# all chord tones must stay strictly below this
FREQUENCY_CEILING_HZ = 4000.0

DEFAULT_CHAR_MS = 100.0
DEFAULT_SAMPLE_RATE_HZ = 8000.0
DEFAULT_LENGTH_RANGE = (3, 5)

MANIFEST_NAME = 'manifest.jsonl'
AUDIO_SUFFIX = '.pcm'
ID_FORMAT = 'utt{:05d}'
ALPHABET_NAME = 'alphabet.txt'
