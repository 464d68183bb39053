#pragma once

#include <stdexcept>
#include <string>

namespace apbe {

// Error hierarchy shared by every module. Each error names a distinct failure
// mode so callers (CLI, service) can map them onto exit codes or HTTP statuses.

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidDistribution : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

struct NotFound : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct SizeLimit : std::length_error {
  using std::length_error::length_error;
};

// Two examples share an input but disagree on the output.
struct Contradiction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySpace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExhaustedInputs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotApplicable : std::logic_error {
  using std::logic_error::logic_error;
};

// Raised when a plan grows past its safety bound; always a bug.
struct NonTermination : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace apbe
