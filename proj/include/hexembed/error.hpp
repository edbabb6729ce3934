#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hexembed {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data. The CLI maps it to exit code 3.
class DataError : public Error {
  public:
    using Error::Error;
};

class ParseError : public DataError {
  public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

  private:
    std::size_t byte_offset_;
};

class EmptyInputError : public DataError {
  public:
    using DataError::DataError;
};

/// Training diverged; carries the position where the loss went non-finite.
class TrainingError : public DataError {
  public:
    TrainingError(const std::string& what, int epoch, int batch)
        : DataError(what + " (epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batch) + ")"),
          epoch_(epoch),
          batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

  private:
    int epoch_;
    int batch_;
};

/// Invalid invocation or configuration (exit code 2).
class UsageError : public Error {
  public:
    using Error::Error;
};

/// An upstream stage's artifacts are missing or changed (exit code 4).
class StaleError : public Error {
  public:
    StaleError(const std::string& stage, const std::string& detail)
        : Error("stage '" + stage + "' is stale: " + detail), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

}  // namespace hexembed
