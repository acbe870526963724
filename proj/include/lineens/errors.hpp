#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lineens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class InvalidInterval : public Error {
 public:
  using Error::Error;
};

class NonPositiveArgument : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveT : public Error {
 public:
  using Error::Error;
};

class OrderViolationInput : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling gave up after `attempts` candidates.
class RejectionBudgetExhausted : public Error {
 public:
  RejectionBudgetExhausted(long long attempts, std::string block)
      : Error("rejection budget exhausted after " + std::to_string(attempts) + " attempts" +
              (block.empty() ? std::string() : " in block " + block)),
        attempts_(attempts),
        block_(std::move(block)) {}

  long long attempts() const { return attempts_; }
  const std::string& block() const { return block_; }

 private:
  long long attempts_;
  std::string block_;
};

class EffectiveSampleSizeTooSmall : public Error {
 public:
  EffectiveSampleSizeTooSmall(double ess, double threshold)
      : Error("effective sample size " + std::to_string(ess) + " below " +
              std::to_string(threshold)),
        ess_(ess) {}
  double ess() const { return ess_; }

 private:
  double ess_;
};

class ZeroHits : public Error {
 public:
  using Error::Error;
};

class MixingDiagnosticFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Carries every problem found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out;
    for (const auto& s : p) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace lineens
