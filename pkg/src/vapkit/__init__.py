"""Voice activity projection: labels, turn-taking events and zero-shot evaluation."""
from .codec import (
    BinConfig,
    HeadKind,
    HeadOutput,
    VapLabels,
    decode_state,
    encode_state,
    make_labels,
    marginal_bins,
    window_bits,
)
from .corpus import Dialog, SynthParams, load_corpus, synth_corpus, write_corpus
from .events import EventInstance, EventParams, EventSet, Task, extract_all
from .kernels import BACKEND
from .timeline import FrameRate, Speaker, VaSegment, VaTimeline, mutual_silences, rasterize, va_history_at

__version__ = "0.1.0"
