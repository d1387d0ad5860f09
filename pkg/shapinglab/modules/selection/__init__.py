"""
Sequence selection on top of PAS: candidates, metrics, selector, cost.

@author: rookielittleblack
@date:   2025-09-02
"""
from .sequence_candidates import (
    CandidateStrategy,
    SelectionConfig,
    Candidate,
    groups_per_block,
    shapers_per_block,
    candidate_space,
    candidate_labels,
    pair_patterns,
    permutation,
    payload_width,
    flip_blocks,
    generate_candidates,
    recover_payload,
    split_payload,
    draw_payload
)
from .selection_metrics import (
    aggregated_energies,
    multiplicative_term,
    metric_edi,
    metric_lsas,
    am_metric,
    metric_am,
    metric_am_selected,
    metric_am_quantized,
    get_metric,
    prepare_kernel,
    kernel_memory,
    selection_kernel
)
from .sequence_selector import (
    SelectionResult,
    SelectionRun,
    score_candidates,
    select,
    predict_selection_gain,
    nlin_power,
    concatenate_frames,
    run_selection
)
from .complexity import ComplexityReport, complexity_report, full_count, selected_count


__all__ = [
    'CandidateStrategy', 'SelectionConfig', 'Candidate', 'groups_per_block', 'shapers_per_block',
    'candidate_space', 'candidate_labels', 'pair_patterns', 'permutation', 'payload_width', 'flip_blocks',
    'generate_candidates', 'recover_payload', 'split_payload', 'draw_payload',
    'aggregated_energies', 'multiplicative_term', 'metric_edi', 'metric_lsas', 'am_metric', 'metric_am',
    'metric_am_selected', 'metric_am_quantized', 'get_metric', 'prepare_kernel',
    'kernel_memory', 'selection_kernel',
    'SelectionResult', 'SelectionRun', 'score_candidates', 'select', 'predict_selection_gain', 'nlin_power',
    'concatenate_frames', 'run_selection',
    'ComplexityReport', 'complexity_report', 'full_count', 'selected_count',
]
