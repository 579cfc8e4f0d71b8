//! Word timings from second-pass forced alignment over CI-phone posteriors,
//! the end-time-only transducer baseline, and timing error metrics.

mod align;
mod metrics;
mod phones;

pub use align::{
    align_bruteforce, count_segmentations, viterbi_align, WordTiming, WordTimingResult, BRUTEFORCE_MAX_SEGMENTATIONS,
};
pub use metrics::{
    ctm_to_timings, evaluate_timings, matched_words, rnnt_baseline_end_times, timing_metrics, timings_to_ctm,
    TimedWord, TimingMetrics, WITHIN_MS,
};
pub use phones::{expand_to_phones, PhoneSequence, WordPhoneSpan};
