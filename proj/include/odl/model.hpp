#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "odl/rng.hpp"

namespace odl {

enum class DictKind { identity, random_orthogonal, supplied };

std::string to_string(DictKind kind);
DictKind dict_kind_from_string(const std::string& s);

/// Bernoulli parameter with range validation.  The theory assumes
/// theta in [1/n, 1/2]; values outside that band (but inside (0,1)) are
/// allowed only through the explicit override used by the geometry lab.
class Theta {
 public:
  /// Validates against the assumed range [1/n, 1/2] for dimension n.
  static Theta checked(double value, int n);
  /// Accepts any value in (0,1) (explicit override).
  static Theta unchecked(double value);

  double value() const { return value_; }

 private:
  explicit Theta(double v) : value_(v) {}
  double value_;
};

/// A generated sparse-coding problem: observations Y = A X with orthogonal A
/// and Bernoulli-Gaussian X.  Immutable after construction and safe to share
/// across threads.
struct Instance {
  int n = 0;
  Eigen::Index m = 0;
  double theta = 0.0;
  DictKind dict_kind = DictKind::identity;
  std::uint64_t seed = 0;
  Eigen::MatrixXd dictionary;    // n x n, orthogonal
  Eigen::MatrixXd coefficients;  // n x m
  Eigen::MatrixXd observations;  // n x m, equals dictionary * coefficients
};

/// Bernoulli(theta)-Gaussian matrix: each entry is N(0,1) with probability
/// theta, else zero.  Deterministic given the seed.
Eigen::MatrixXd sample_bg(int n, Eigen::Index m, const Theta& theta, std::uint64_t seed);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// R-diagonal sign correction.
Eigen::MatrixXd sample_orthogonal(int n, std::uint64_t seed);

/// Max-norm orthogonality defect ||A^T A - I||_max.
double orthogonality_defect(const Eigen::MatrixXd& A);

Instance make_instance(int n, Eigen::Index m, const Theta& theta, DictKind kind,
                       std::uint64_t seed,
                       const Eigen::MatrixXd* supplied_dictionary = nullptr);

/// Rotates an instance to the identity-dictionary case: observations become
/// A^T Y = X.  A solution q' on the rotated instance corresponds to q = A q'
/// on the original.
Instance rotate_to_identity(const Instance& instance);

/// Binary container: 8-byte magic, little-endian u32 header length, JSON
/// header {n, m, theta, dict_kind, seed, version}, then dictionary,
/// coefficients and observations as little-endian f64 column-major payloads.
void save_instance(const Instance& instance, std::ostream& out);
void save_instance(const Instance& instance, const std::string& path);
Instance load_instance(std::istream& in);
Instance load_instance(const std::string& path);

}  // namespace odl
