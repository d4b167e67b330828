#include "odl/model.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>
#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "instance files are little-endian; big-endian hosts are unsupported");

namespace odl {

std::string to_string(DictKind kind) {
  switch (kind) {
    case DictKind::identity: return "identity";
    case DictKind::random_orthogonal: return "random_orthogonal";
    case DictKind::supplied: return "supplied";
  }
  return "unknown";
}

DictKind dict_kind_from_string(const std::string& s) {
  if (s == "identity") return DictKind::identity;
  if (s == "random_orthogonal") return DictKind::random_orthogonal;
  if (s == "supplied") return DictKind::supplied;
  throw std::invalid_argument("unknown dict_kind: " + s);
}

Theta Theta::checked(double value, int n) {
  if (n < 1) throw std::invalid_argument("Theta: dimension must be positive");
  if (!(value > 0.0 && value < 1.0))
    throw std::invalid_argument("Theta: value must lie in (0,1)");
  if (value < 1.0 / n - 1e-12 || value > 0.5 + 1e-12)
    throw std::invalid_argument("Theta: value outside assumed range [1/n, 1/2]; "
                                "use Theta::unchecked to override");
  return Theta(value);
}

Theta Theta::unchecked(double value) {
  if (!(value > 0.0 && value < 1.0))
    throw std::invalid_argument("Theta: value must lie in (0,1)");
  return Theta(value);
}

Eigen::MatrixXd sample_bg(int n, Eigen::Index m, const Theta& theta, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("sample_bg: dimensions must be positive");
  const double th = theta.value();
  Philox gen(seed, /*stream=*/2);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      if (gen.next_double() < th) X(i, j) = gen.next_gaussian();
  return X;
}

Eigen::MatrixXd sample_orthogonal(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_orthogonal: n must be positive");
  Philox gen(seed, /*stream=*/1);
  Eigen::MatrixXd G(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) G(i, j) = gen.next_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd& R = qr.matrixQR();
  // Multiply columns by sign(diag(R)) to remove the QR sign ambiguity; this
  // makes the distribution exactly Haar.
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

double orthogonality_defect(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd G = A.transpose() * A;
  return (G - Eigen::MatrixXd::Identity(A.cols(), A.cols())).cwiseAbs().maxCoeff();
}

Instance make_instance(int n, Eigen::Index m, const Theta& theta, DictKind kind,
                       std::uint64_t seed, const Eigen::MatrixXd* supplied_dictionary) {
  if (n < 1 || m < 1) throw std::invalid_argument("make_instance: dimensions must be positive");
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.theta = theta.value();
  inst.dict_kind = kind;
  inst.seed = seed;
  switch (kind) {
    case DictKind::identity:
      inst.dictionary = Eigen::MatrixXd::Identity(n, n);
      break;
    case DictKind::random_orthogonal:
      inst.dictionary = sample_orthogonal(n, seed);
      break;
    case DictKind::supplied:
      if (supplied_dictionary == nullptr)
        throw std::invalid_argument("make_instance: supplied dictionary missing");
      if (supplied_dictionary->rows() != n || supplied_dictionary->cols() != n)
        throw std::invalid_argument("make_instance: supplied dictionary has wrong shape");
      if (orthogonality_defect(*supplied_dictionary) > 1e-10)
        throw std::invalid_argument("make_instance: supplied dictionary is not orthogonal");
      inst.dictionary = *supplied_dictionary;
      break;
  }
  inst.coefficients = sample_bg(n, m, theta, seed);
  if (kind == DictKind::identity)
    inst.observations = inst.coefficients;
  else
    inst.observations = inst.dictionary * inst.coefficients;
  return inst;
}

Instance rotate_to_identity(const Instance& instance) {
  Instance out = instance;
  if (instance.dict_kind == DictKind::identity) return out;
  out.observations = instance.dictionary.transpose() * instance.observations;
  out.dictionary = Eigen::MatrixXd::Identity(instance.n, instance.n);
  out.dict_kind = DictKind::identity;
  return out;
}

namespace {

constexpr char kMagic[8] = {'O', 'D', 'L', 'I', 'N', 'S', 'T', '1'};

void write_matrix(std::ostream& out, const Eigen::MatrixXd& M) {
  out.write(reinterpret_cast<const char*>(M.data()),
            static_cast<std::streamsize>(sizeof(double) * M.size()));
}

void read_matrix(std::istream& in, Eigen::MatrixXd& M) {
  in.read(reinterpret_cast<char*>(M.data()),
          static_cast<std::streamsize>(sizeof(double) * M.size()));
  if (!in) throw std::runtime_error("instance file truncated");
}

}  // namespace

void save_instance(const Instance& instance, std::ostream& out) {
  nlohmann::json header = {
      {"version", 1},
      {"n", instance.n},
      {"m", instance.m},
      {"theta", instance.theta},
      {"dict_kind", to_string(instance.dict_kind)},
      {"seed", instance.seed},
  };
  const std::string hdr = header.dump();
  const auto len = static_cast<std::uint32_t>(hdr.size());
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  write_matrix(out, instance.dictionary);
  write_matrix(out, instance.coefficients);
  write_matrix(out, instance.observations);
  if (!out) throw std::runtime_error("failed writing instance");
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  save_instance(instance, f);
}

Instance load_instance(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("not an instance file (bad magic)");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) throw std::runtime_error("corrupt instance header");
  std::string hdr(len, '\0');
  in.read(hdr.data(), len);
  if (!in) throw std::runtime_error("corrupt instance header");
  nlohmann::json header = nlohmann::json::parse(hdr);
  Instance inst;
  inst.n = header.at("n").get<int>();
  inst.m = header.at("m").get<Eigen::Index>();
  inst.theta = header.at("theta").get<double>();
  inst.dict_kind = dict_kind_from_string(header.at("dict_kind").get<std::string>());
  inst.seed = header.at("seed").get<std::uint64_t>();
  if (inst.n < 1 || inst.m < 1) throw std::runtime_error("corrupt instance dimensions");
  inst.dictionary.resize(inst.n, inst.n);
  inst.coefficients.resize(inst.n, inst.m);
  inst.observations.resize(inst.n, inst.m);
  read_matrix(in, inst.dictionary);
  read_matrix(in, inst.coefficients);
  read_matrix(in, inst.observations);
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open instance file: " + path);
  return load_instance(f);
}

}  // namespace odl
