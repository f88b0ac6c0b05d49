"""Synthetic topological-reasoning benchmark."""

from nag.synth.dataset import (
    DatasetConfig,
    build_sample,
    generate_dataset,
    load_split,
    read_jsonl,
    split_sizes,
    verify_samples,
    write_dataset,
    write_jsonl,
)
from nag.synth.encodings import ALL_ENCODINGS, NamePoolExhausted, TextEncodingScheme, apply_text_encoding
from nag.synth.generators import ALL_TOPOLOGIES, GeneratorParamError, TopologyKind, generate_graph
from nag.synth.tasks import (
    ALL_TASKS,
    BOOLEAN_TASKS,
    INTEGER_TASKS,
    NO_PATH,
    SET_TASKS,
    FocusError,
    TaskKind,
    TaskSample,
    make_sample,
    render_answer,
    solve_task,
)
