"""
Command-line surface.

``run(argv)`` never exits the process and never prints; it returns the exit
code, the stdout payload and the error text, and ``main.py`` does the I/O.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from app.cli.config import (
    DEFAULT_AUDIO_SAMPLE_RATE_HZ,
    DEFAULT_BEAM_WIDTH,
    DEFAULT_GRADCHECK_SEED,
    DEFAULT_GRADCHECK_STEP,
    DEFAULT_GRADCHECK_TOLERANCE,
    DEFAULT_NBEST,
    DEFAULT_SPECTRUM_DURATION_S,
    NUMBER_FORMAT,
)
from app.core.config import build_config, configure_logging, load_config_file, split_config
from app.core.errors import (
    AlphabetError,
    ConfigError,
    CorpusError,
    GradientCheckError,
    PipelineError,
    UsageError,
)
from app.corpus.config import ALPHABET_NAME, DEFAULT_CHAR_MS, DEFAULT_SAMPLE_RATE_HZ
from app.corpus.dataset import build_dataset
from app.corpus.manifest import load_audio, load_manifest
from app.corpus.synth import synth_corpus
from app.ctc.alphabet import Alphabet, load_alphabet
from app.decode.metrics import edit_distance
from app.decode.search import Hypothesis, beam_search, greedy_decode
from app.dsp.features import FeatureConfig
from app.dsp.fourier import spectrum_of
from app.dsp.signal import read_pcm, synthesize_tones
from app.lm.char_lm import CharLm, lm_train, rescore
from app.lm.config import DEFAULT_LM_WEIGHT
from app.nn.model import AcousticModel, ModelConfig, init_params
from app.train.checkpoint import load_acoustic, load_lm, save_checkpoint
from app.train.config import TrainConfig
from app.train.gradcheck import grad_check, random_instance
from app.train.loop import train_acoustic

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    exit_code: int
    output: str = ''
    error: str = ''


class HelpRequested(Exception):
    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing and exiting."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")

    def print_help(self, file=None):
        raise HelpRequested(self.format_help())


def fmt(value: float) -> str:
    return format(float(value), NUMBER_FORMAT)


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


SETTINGS_SECTIONS = (TrainConfig, ModelConfig, FeatureConfig)

# flag attribute -> config field; flags default to None so file values survive
TRAIN_FLAGS = {
    'lr': 'learning_rate',
    'momentum': 'momentum',
    'clip': 'clip_norm',
    'dropout': 'dropout_p',
    'weight_noise': 'weight_noise_std',
    'epochs': 'epochs',
    'seed': 'seed',
    'layers': 'num_layers',
    'hidden': 'hidden_size',
    'init_range': 'init_range',
    'frame_ms': 'frame_ms',
    'window': 'window',
}


def load_settings(args: argparse.Namespace) -> Tuple[TrainConfig, ModelConfig, FeatureConfig]:
    """Defaults < ``--config`` file < flags."""
    file_values = load_config_file(args.config)
    known = {f.name for cls in SETTINGS_SECTIONS for f in dataclasses.fields(cls)}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys in {args.config}: {', '.join(k.upper() for k in unknown)}")

    overrides = {field: getattr(args, flag, None) for flag, field in TRAIN_FLAGS.items()}
    if getattr(args, 'no_shuffle', False):
        overrides['shuffle'] = False
    return tuple(
        build_config(cls, split_config(file_values, cls), overrides) for cls in SETTINGS_SECTIONS
    )


def resolve_alphabet(alphabet_path: Optional[str], manifest_path: Optional[str]) -> Alphabet:
    """Explicit file, else the alphabet written next to the manifest, else the default A-Z plus space."""
    if alphabet_path:
        return load_alphabet(alphabet_path)
    if manifest_path:
        candidate = os.path.join(os.path.dirname(manifest_path), ALPHABET_NAME)
        if os.path.isfile(candidate):
            return load_alphabet(candidate)
    return Alphabet.default()


def decode_best(log_probs, beam_width: int, n_best: Optional[int], lm: Optional[CharLm],
                weight: float) -> Hypothesis:
    if lm is not None:
        n = n_best or DEFAULT_NBEST
        return rescore(beam_search(log_probs, max(beam_width, n), n), lm, weight)[0]
    if n_best or beam_width > 1:
        return beam_search(log_probs, max(beam_width, n_best or 1), 1)[0]
    return greedy_decode(log_probs)


def check_lm_alphabet(model: AcousticModel, lm: CharLm) -> None:
    if lm.alphabet != model.alphabet:
        raise AlphabetError("language model and acoustic model use different alphabets")


def cmd_synth_data(args: argparse.Namespace) -> CommandResult:
    alphabet = load_alphabet(args.alphabet) if args.alphabet else Alphabet.default()
    manifest = synth_corpus(args.out, args.n, (args.min_len, args.max_len), alphabet, args.seed,
                            args.sr, args.char_ms)
    rows = ['id\ttranscript'] + [f'{entry.id}\t{entry.transcript}' for entry in manifest]
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_spectrum(args: argparse.Namespace) -> CommandResult:
    if args.audio:
        signal = read_pcm(args.audio, args.sr)
    else:
        amps = args.amps if args.amps is not None else [1.0] * len(args.freqs)
        signal = synthesize_tones(args.freqs, amps, args.dur, args.sr)
    spectrum = spectrum_of(signal.samples, signal.sample_rate_hz)
    rows = ['frequency_hz,magnitude']
    rows.extend(f'{fmt(f)},{fmt(m)}' for f, m in zip(spectrum.frequencies, spectrum.magnitudes))
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_train(args: argparse.Namespace) -> CommandResult:
    train_config, model_config, feature_config = load_settings(args)
    manifest = load_manifest(args.manifest)
    alphabet = resolve_alphabet(args.alphabet, args.manifest)
    dataset = build_dataset(manifest, alphabet, feature_config)
    if not dataset:
        raise CorpusError(f"manifest {args.manifest} has no utterances")

    sizes = model_config.sizes(dataset[0].features.shape[1], alphabet.num_classes)
    params = init_params(sizes, train_config.seed, model_config.init_range, model_config.forget_bias)
    params, report = train_acoustic(params, dataset, train_config)
    save_checkpoint(AcousticModel(params, alphabet, feature_config), args.out)

    rows = ['epoch\tloss\tcer']
    rows.extend(
        f'{epoch}\t{fmt(loss)}\t{fmt(cer)}'
        for epoch, (loss, cer) in enumerate(zip(report.epoch_losses, report.epoch_cer), start=1)
    )
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_transcribe(args: argparse.Namespace) -> CommandResult:
    model = load_acoustic(args.model)
    log_probs = model.log_probs(read_pcm(args.audio, args.sr))
    best = decode_best(log_probs, args.beam, None, None, 0.0)
    return CommandResult(0, model.alphabet.decode(best.transcript) + '\n')


def cmd_nbest(args: argparse.Namespace) -> CommandResult:
    model = load_acoustic(args.model)
    log_probs = model.log_probs(read_pcm(args.audio, args.sr))
    hyps = beam_search(log_probs, max(args.beam, args.n), args.n)
    rows = [
        f'{rank}\t{fmt(h.combined)}\t{fmt(h.log_p_acoustic)}\t{model.alphabet.decode(h.transcript)}'
        for rank, h in enumerate(hyps, start=1)
    ]
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_rescore(args: argparse.Namespace) -> CommandResult:
    if args.weight < 0:
        raise ConfigError(f"--lambda must be non-negative, got {args.weight}")
    model = load_acoustic(args.model)
    lm = load_lm(args.lm)
    check_lm_alphabet(model, lm)
    log_probs = model.log_probs(read_pcm(args.audio, args.sr))
    hyps = rescore(beam_search(log_probs, max(args.beam, args.n), args.n), lm, args.weight)
    rows = [
        f'{rank}\t{fmt(h.combined)}\t{fmt(h.log_p_acoustic)}\t{fmt(h.log_p_lm)}\t'
        f'{model.alphabet.decode(h.transcript)}'
        for rank, h in enumerate(hyps, start=1)
    ]
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_evaluate(args: argparse.Namespace) -> CommandResult:
    """
    Per-utterance CER/WER rows, then a TOTAL row of total edits over total reference length.

    Errors are counted over alphabet symbols and over runs of symbols between spaces.
    """
    if args.weight < 0:
        raise ConfigError(f"--lambda must be non-negative, got {args.weight}")
    model = load_acoustic(args.model)
    lm = None
    if args.lm:
        lm = load_lm(args.lm)
        check_lm_alphabet(model, lm)
    manifest = load_manifest(args.manifest)

    rows = ['id\tcer\twer\thypothesis\treference']
    char_edits = char_total = word_edits = word_total = 0
    for entry in manifest:
        reference = entry.transcript
        labels = model.alphabet.encode(reference)
        words = model.alphabet.words(labels)
        if not words:
            raise CorpusError(f"utterance {entry.id} has no words in its reference transcript")

        log_probs = model.log_probs(load_audio(entry))
        best = decode_best(log_probs, args.beam, args.nbest, lm, args.weight)
        hypothesis = model.alphabet.decode(best.transcript)

        edits = edit_distance(best.transcript, labels)
        w_edits = edit_distance(model.alphabet.words(best.transcript), words)
        char_edits += edits
        char_total += len(labels)
        word_edits += w_edits
        word_total += len(words)
        rows.append(
            f'{entry.id}\t{fmt(edits / len(labels))}\t{fmt(w_edits / len(words))}\t{hypothesis}\t{reference}'
        )

    if char_total == 0:
        raise CorpusError(f"manifest {args.manifest} has no utterances")
    total_cer = char_edits / char_total
    total_wer = word_edits / word_total
    logger.info(f"[EVALUATE] {len(manifest)} utterances, CER={total_cer:.4f} WER={total_wer:.4f}")
    rows.append(f'TOTAL\t{fmt(total_cer)}\t{fmt(total_wer)}\t\t')
    return CommandResult(0, '\n'.join(rows) + '\n')


def cmd_gradcheck(args: argparse.Namespace) -> CommandResult:
    if not args.tol >= 0:
        raise ConfigError(f"--tol must be non-negative, got {args.tol}")
    instance = random_instance(args.seed, num_layers=args.layers, hidden_size=args.hidden,
                               input_size=args.features, frames=args.frames)
    error = grad_check(instance.model, instance.features, instance.labels, args.step)
    output = f'parameters\tmax_relative_error\n{instance.model.num_parameters()}\t{fmt(error)}\n'
    if error > args.tol:
        message = f"[GRADCHECK] max relative error {error:.3e} exceeds tolerance {args.tol:.3e}"
        logger.error(message)
        return CommandResult(GradientCheckError.exit_code, output, message)
    return CommandResult(0, output)


def cmd_train_lm(args: argparse.Namespace) -> CommandResult:
    train_config, model_config, _ = load_settings(args)
    if args.text:
        try:
            with open(args.text, encoding='utf-8') as handle:
                corpus = [line.rstrip('\r\n') for line in handle if line.strip()]
        except OSError as e:
            raise CorpusError(f"cannot read text corpus {args.text}: {e}")
        alphabet = resolve_alphabet(args.alphabet, None)
    else:
        corpus = [entry.transcript for entry in load_manifest(args.manifest)]
        alphabet = resolve_alphabet(args.alphabet, args.manifest)

    lm, report = lm_train(corpus, alphabet, train_config, model_config.hidden_size, model_config.init_range)
    save_checkpoint(lm, args.out)
    rows = ['epoch\tcross_entropy']
    rows.extend(f'{epoch}\t{fmt(loss)}' for epoch, loss in enumerate(report.epoch_losses, start=1))
    return CommandResult(0, '\n'.join(rows) + '\n')


def _add_training_flags(p: argparse.ArgumentParser, acoustic: bool) -> None:
    p.add_argument('--seed', type=int, required=True, help='Seed for initialization, shuffling and noise')
    p.add_argument('--config', help='KEY=VALUE file with TrainConfig / ModelConfig / FeatureConfig fields')
    p.add_argument('--out', required=True, help='Checkpoint path to write')
    p.add_argument('--alphabet', help='Alphabet file (default: alphabet.txt next to the manifest)')
    p.add_argument('--lr', type=float)
    p.add_argument('--momentum', type=float)
    p.add_argument('--clip', type=float, help='Global gradient-norm limit')
    p.add_argument('--weight-noise', dest='weight_noise', type=float, help='Weight-noise std per sequence')
    p.add_argument('--epochs', type=int)
    p.add_argument('--no-shuffle', dest='no_shuffle', action='store_true')
    p.add_argument('--hidden', type=int, help='LSTM hidden size')
    p.add_argument('--init-range', dest='init_range', type=float)
    if acoustic:
        p.add_argument('--dropout', type=float, help='Inter-layer dropout probability')
        p.add_argument('--layers', type=int, help='Number of bidirectional layers')
        p.add_argument('--frame-ms', dest='frame_ms', type=float)
        p.add_argument('--window', choices=('rect', 'hann'))


def _add_decoding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument('--model', required=True, help='Acoustic-model checkpoint')
    p.add_argument('--audio', required=True, help='Headerless 16-bit little-endian mono PCM file')
    p.add_argument('--sr', type=float, default=DEFAULT_AUDIO_SAMPLE_RATE_HZ, help='Sample rate in Hz')


def build_parser() -> CliParser:
    parser = CliParser(prog='speech', description='Desk-scale speech-to-text pipeline')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth-data', help='Write a synthetic tone-chord corpus')
    p.add_argument('--out', required=True, help='Output directory')
    p.add_argument('--n', type=int, default=20, help='Number of utterances')
    p.add_argument('--min-len', dest='min_len', type=int, default=3)
    p.add_argument('--max-len', dest='max_len', type=int, default=5)
    p.add_argument('--alphabet', help='Alphabet file (default: A-Z plus space)')
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--sr', type=float, default=DEFAULT_SAMPLE_RATE_HZ)
    p.add_argument('--char-ms', dest='char_ms', type=float, default=DEFAULT_CHAR_MS)
    p.set_defaults(handler=cmd_synth_data)

    p = sub.add_parser('spectrum', help='Print the magnitude spectrum as CSV')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--freqs', type=_float_list, help='Comma-separated tone frequencies in Hz')
    source.add_argument('--audio', help='PCM file to analyse')
    p.add_argument('--amps', type=_float_list, help='Comma-separated amplitudes (default 1 each)')
    p.add_argument('--sr', type=float, default=DEFAULT_AUDIO_SAMPLE_RATE_HZ)
    p.add_argument('--dur', type=float, default=DEFAULT_SPECTRUM_DURATION_S, help='Duration in seconds')
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser('train', help='Train the acoustic model with CTC')
    p.add_argument('--manifest', required=True)
    _add_training_flags(p, acoustic=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser('transcribe', help='Print the best transcript of one audio file')
    _add_decoding_flags(p)
    p.add_argument('--beam', type=int, default=1, help='Beam width (1 = greedy)')
    p.set_defaults(handler=cmd_transcribe)

    p = sub.add_parser('nbest', help='Print the n-best list as TSV')
    _add_decoding_flags(p)
    p.add_argument('--beam', type=int, default=DEFAULT_BEAM_WIDTH)
    p.add_argument('--n', type=int, default=DEFAULT_NBEST)
    p.set_defaults(handler=cmd_nbest)

    p = sub.add_parser('rescore', help='Rescore the n-best list with a character LM')
    _add_decoding_flags(p)
    p.add_argument('--lm', required=True, help='Language-model checkpoint')
    p.add_argument('--lambda', dest='weight', type=float, default=DEFAULT_LM_WEIGHT, help='LM weight')
    p.add_argument('--beam', type=int, default=DEFAULT_BEAM_WIDTH)
    p.add_argument('--n', type=int, default=DEFAULT_NBEST)
    p.set_defaults(handler=cmd_rescore)

    p = sub.add_parser('evaluate', help='Character and word error rates over a manifest')
    p.add_argument('--manifest', required=True)
    p.add_argument('--model', required=True)
    p.add_argument('--nbest', type=int, help='Decode with beam search and take the best of N')
    p.add_argument('--beam', type=int, default=1)
    p.add_argument('--lm', help='Rescore the n-best list with this LM checkpoint')
    p.add_argument('--lambda', dest='weight', type=float, default=DEFAULT_LM_WEIGHT)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser('gradcheck', help='Finite-difference check of CTC + BPTT gradients')
    p.add_argument('--seed', type=int, default=DEFAULT_GRADCHECK_SEED)
    p.add_argument('--tol', type=float, default=DEFAULT_GRADCHECK_TOLERANCE)
    p.add_argument('--step', type=float, default=DEFAULT_GRADCHECK_STEP)
    p.add_argument('--layers', type=int, default=2)
    p.add_argument('--hidden', type=int, default=5)
    p.add_argument('--features', type=int, default=4)
    p.add_argument('--frames', type=int, default=6)
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser('train-lm', help='Train the character language model')
    corpus = p.add_mutually_exclusive_group(required=True)
    corpus.add_argument('--text', help='Plain-text corpus, one transcript per line')
    corpus.add_argument('--manifest', help='Use the transcripts of a manifest')
    _add_training_flags(p, acoustic=False)
    p.set_defaults(handler=cmd_train_lm)

    return parser


def run(argv: Sequence[str]) -> CommandResult:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except HelpRequested as e:
        return CommandResult(0, e.text)
    except UsageError as e:
        return CommandResult(e.exit_code, '', str(e))

    configure_logging(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
    handler: Callable[[argparse.Namespace], CommandResult] = args.handler
    try:
        return handler(args)
    except PipelineError as e:
        logger.error(f"[{args.command.upper()}] {type(e).__name__}: {e}")
        return CommandResult(e.exit_code, '', str(e))
