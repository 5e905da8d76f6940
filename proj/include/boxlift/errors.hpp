#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace boxlift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point lies at or behind the camera plane.
class NonPositiveDepth : public Error {
 public:
  explicit NonPositiveDepth(double depth)
      : Error("point has non-positive depth " + std::to_string(depth)), depth_(depth) {}
  double depth() const noexcept { return depth_; }

 private:
  double depth_;
};

class Infeasible : public Error {
 public:
  enum class Reason { RankDeficient, BehindCamera };
  Infeasible(Reason reason, const std::string& what) : Error(what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

class NoFeasibleConfiguration : public Error {
 public:
  NoFeasibleConfiguration() : Error("no feasible corner-to-side configuration") {}
};

class ZeroVector : public Error {
 public:
  explicit ZeroVector(std::size_t bin)
      : Error("orientation pair of bin " + std::to_string(bin) + " has (near) zero norm"), bin_(bin) {}
  std::size_t bin() const noexcept { return bin_; }

 private:
  std::size_t bin_;
};

class NonUprightBox : public Error {
 public:
  NonUprightBox() : Error("3D IoU requires boxes with zero pitch and roll") {}
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& token, const std::string& detail)
      : Error("line " + std::to_string(line_no) + ": " + detail + " (token '" + token + "')"),
        line_no_(line_no),
        token_(token) {}
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t line_no_;
  std::string token_;
};

class MissingKey : public Error {
 public:
  explicit MissingKey(const std::string& key) : Error("missing key '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class NoSamples : public Error {
 public:
  explicit NoSamples(const std::string& category)
      : Error("no samples for category '" + category + "'"), category_(category) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class DivergedLoss : public Error {
 public:
  DivergedLoss(int epoch, double loss)
      : Error("training loss became non-finite at epoch " + std::to_string(epoch)), epoch_(epoch), loss_(loss) {}
  int epoch() const noexcept { return epoch_; }
  double loss() const noexcept { return loss_; }

 private:
  int epoch_;
  double loss_;
};

}  // namespace boxlift
