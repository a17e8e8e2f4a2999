#pragma once

#include <stdexcept>
#include <string>

namespace osrlab {

// Base of every error raised by the library. Subclasses let callers tell
// validation problems apart from runtime failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(std::size_t lhs, std::size_t rhs)
      : InvalidArgument("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
  explicit DimensionMismatch(const std::string& what) : InvalidArgument(what) {}
};

class ZeroNorm : public InvalidArgument {
 public:
  ZeroNorm() : InvalidArgument("zero-norm vector has no direction") {}
};

class EmptyInput : public InvalidArgument {
 public:
  explicit EmptyInput(const std::string& what) : InvalidArgument("empty input: " + what) {}
};

class NonFinite : public InvalidArgument {
 public:
  explicit NonFinite(const std::string& what) : InvalidArgument("non-finite value in " + what) {}
};

// Training loss left the finite range or exceeded the divergence threshold.
class Divergence : public Error {
 public:
  Divergence(std::size_t epoch, double loss)
      : Error("training diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(loss) + ")"),
        epoch_(epoch),
        loss_(loss) {}

  std::size_t epoch() const { return epoch_; }
  double loss() const { return loss_; }

 private:
  std::size_t epoch_;
  double loss_;
};

}  // namespace osrlab
