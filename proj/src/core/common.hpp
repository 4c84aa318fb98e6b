#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gs {

enum class errc {
  ok = 0,
  // configuration / usage
  invalid_config,
  vocab_too_small,
  too_few_samples,
  empty_corpus,
  empty_cohort,
  empty_prompt,
  cohort_too_small,
  missing_bounds,
  settings_mismatch,
  bounds_too_tight,
  class_imbalance,
  single_class_eval,
  // data / format
  malformed_header,
  malformed_record,
  missing_genotype,
  unknown_token_id,
  token_out_of_range,
  sequence_too_long,
  sequence_too_short,
  length_mismatch,
  dimension_mismatch,
  bad_checkpoint,
  bad_tokenizer_file,
  // numeric
  non_finite_gradient,
  non_finite_loss,
  // io
  io_error,
};

const char* errc_name(errc c);

// Library-wide exception type. The C shim maps code() onto the flat status
// enum of the public header.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool ok, errc code, const std::string& msg) {
  if (!ok) raise(code, msg);
}

}  // namespace gs
