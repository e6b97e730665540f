#pragma once

#include <cassert>
#include <optional>
#include <utility>

namespace vslam {

// Expected failure modes of geometric and pipeline operations. These are
// outcomes, not programming errors: a caller is supposed to branch on them.
enum class Fail {
  None = 0,
  BehindCamera,
  LowParallax,
  NegativeDepth,
  HighReprojection,
  InsufficientData,
  NoConsensus,
  Degenerate,
  TooFewMatches,
  NoCandidate,
  BackendFailure,
  DimensionMismatch,
  EmptyCorpus,
  RankDeficient,
  EmptyOverlap,
  TooShortTrajectory,
  RejectionBudgetExceeded,
};

const char* to_string(Fail f);

template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Fail f) : fail_(f) { assert(f != Fail::None); }

  bool ok() const { return fail_ == Fail::None; }
  explicit operator bool() const { return ok(); }
  Fail error() const { return fail_; }

  T& operator*() {
    assert(ok());
    return *value_;
  }
  const T& operator*() const {
    assert(ok());
    return *value_;
  }
  T* operator->() { return &**this; }
  const T* operator->() const { return &**this; }
  const T& value() const { return **this; }

 private:
  std::optional<T> value_;
  Fail fail_ = Fail::None;
};

}  // namespace vslam
