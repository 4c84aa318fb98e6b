#include "core/common.hpp"

namespace gs {

const char* errc_name(errc c) {
  switch (c) {
    case errc::ok: return "Ok";
    case errc::invalid_config: return "InvalidConfig";
    case errc::vocab_too_small: return "VocabTooSmall";
    case errc::too_few_samples: return "TooFewSamples";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::empty_cohort: return "EmptyCohort";
    case errc::empty_prompt: return "EmptyPrompt";
    case errc::cohort_too_small: return "CohortTooSmall";
    case errc::missing_bounds: return "MissingBounds";
    case errc::settings_mismatch: return "SettingsMismatch";
    case errc::bounds_too_tight: return "BoundsTooTight";
    case errc::class_imbalance: return "ClassImbalanceFatal";
    case errc::single_class_eval: return "SingleClassEval";
    case errc::malformed_header: return "MalformedHeader";
    case errc::malformed_record: return "MalformedRecord";
    case errc::missing_genotype: return "MissingGenotype";
    case errc::unknown_token_id: return "UnknownTokenId";
    case errc::token_out_of_range: return "TokenOutOfRange";
    case errc::sequence_too_long: return "SequenceTooLong";
    case errc::sequence_too_short: return "SequenceTooShort";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::bad_checkpoint: return "BadCheckpoint";
    case errc::bad_tokenizer_file: return "BadTokenizerFile";
    case errc::non_finite_gradient: return "NonFiniteGradient";
    case errc::non_finite_loss: return "NonFiniteLoss";
    case errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace gs
