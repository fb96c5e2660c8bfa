#pragma once

#include <stdexcept>
#include <string>

namespace tweetsat {

// Data or validation failure raised by any pipeline stage. The CLI maps it to
// exit code 2 and prints what() verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergedTraining : public Error {
 public:
  DivergedTraining(const std::string& model, int epoch)
      : Error(model + ": training diverged (non-finite loss) at epoch " +
              std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace tweetsat
