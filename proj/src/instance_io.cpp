#include "otbarrier/instance_io.hpp"

#include "otbarrier/errors.hpp"
#include "otbarrier/random.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace otb {

using nlohmann::json;

namespace {

const char* kind_name(InstanceKind k) { return k == InstanceKind::classical ? "classical" : "quantum"; }

HermitianMatrix matrix_from_pairs(std::size_t n, const std::vector<double>& pairs, const std::string& what) {
  if (pairs.size() != 2 * n * n)
    throw DimensionMismatch(what + " must hold " + std::to_string(2 * n * n) +
                            " numbers (interleaved re, im), found " + std::to_string(pairs.size()));
  Eigen::MatrixXcd m(n, n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t k = 2 * (p * n + q);
      m(p, q) = Complex(pairs[k], pairs[k + 1]);
    }
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    throw InvalidArgument(what + " is not Hermitian");
  return HermitianMatrix(m);
}

std::vector<double> pairs_from_matrix(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  std::vector<double> out;
  out.reserve(2 * n * n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      out.push_back(h(p, q).real());
      out.push_back(h(p, q).imag());
    }
  return out;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("instance file is missing \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("instance field \"") + key + "\" has the wrong type: " + e.what());
  }
}

}  // namespace

std::string to_json(const InstanceFile& file) {
  json j;
  j["kind"] = kind_name(file.kind);
  j["dims"] = file.dims;
  j["cost"] = file.cost;
  j["marginals"] = file.marginals;
  if (!file.name.empty()) j["name"] = file.name;
  if (file.seed) j["seed"] = *file.seed;
  return j.dump(1) + "\n";
}

InstanceFile parse_instance(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("instance file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("instance file must hold a JSON object");
  InstanceFile f;
  const auto kind = field<std::string>(j, "kind");
  if (kind == "classical")
    f.kind = InstanceKind::classical;
  else if (kind == "quantum")
    f.kind = InstanceKind::quantum;
  else
    throw InputError("instance kind must be \"classical\" or \"quantum\", found \"" + kind + "\"");
  f.dims = field<Dims>(j, "dims");
  f.cost = field<std::vector<double>>(j, "cost");
  f.marginals = field<std::vector<std::vector<double>>>(j, "marginals");
  if (j.contains("name")) f.name = field<std::string>(j, "name");
  if (j.contains("seed")) f.seed = field<std::uint64_t>(j, "seed");
  if (f.dims.size() < 2) throw InputError("instance needs at least two parties");
  for (auto n : f.dims)
    if (n == 0) throw InputError("instance dimensions must be positive");
  if (f.marginals.size() != f.dims.size())
    throw DimensionMismatch("instance has " + std::to_string(f.marginals.size()) + " marginals for " +
                            std::to_string(f.dims.size()) + " parties");
  return f;
}

InstanceFile read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open instance file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

void write_instance_file(const std::string& path, const InstanceFile& file) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write instance file " + path);
  out << to_json(file);
}

ClassicalInstance to_classical(const InstanceFile& file) {
  if (file.kind != InstanceKind::classical) throw InputError("instance is not classical");
  const std::size_t n = product(file.dims);
  if (file.cost.size() != n)
    throw DimensionMismatch("cost must hold " + std::to_string(n) + " entries, found " +
                            std::to_string(file.cost.size()));
  for (std::size_t i = 0; i < file.dims.size(); ++i)
    if (file.marginals[i].size() != file.dims[i])
      throw DimensionMismatch("marginal " + std::to_string(i + 1) + " must hold " +
                              std::to_string(file.dims[i]) + " entries");
  return ClassicalInstance(DenseTensor(file.dims, file.cost), MarginalFamily(file.marginals));
}

QuantumInstance to_quantum(const InstanceFile& file) {
  if (file.kind != InstanceKind::quantum) throw InputError("instance is not quantum");
  const std::size_t n = product(file.dims);
  HermitianMatrix c = matrix_from_pairs(n, file.cost, "cost");
  std::vector<HermitianMatrix> rho;
  for (std::size_t i = 0; i < file.dims.size(); ++i)
    rho.push_back(matrix_from_pairs(file.dims[i], file.marginals[i], "marginal " + std::to_string(i + 1)));
  return QuantumInstance(ProductOperator(file.dims, std::move(c)), DensityFamily(std::move(rho)));
}

InstanceFile from_classical(const ClassicalInstance& inst, const std::string& name) {
  InstanceFile f;
  f.kind = InstanceKind::classical;
  f.dims = inst.dims();
  f.cost.assign(inst.cost.entries().begin(), inst.cost.entries().end());
  f.marginals = inst.marginals.vectors();
  f.name = name;
  return f;
}

InstanceFile from_quantum(const QuantumInstance& inst, const std::string& name) {
  InstanceFile f;
  f.kind = InstanceKind::quantum;
  f.dims = inst.dims();
  f.cost = pairs_from_matrix(inst.cost.matrix);
  for (const auto& r : inst.densities.matrices()) f.marginals.push_back(pairs_from_matrix(r));
  f.name = name;
  return f;
}

Instance load_instance(const std::string& path) {
  const InstanceFile f = read_instance_file(path);
  if (f.kind == InstanceKind::classical) return to_classical(f);
  return to_quantum(f);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> positive_weights(Rng& rng, std::size_t n, double floor) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) {
    v = floor + (1.0 - floor) * rng.uniform();
    s += v;
  }
  for (auto& v : w) v /= s;
  return w;
}

Eigen::MatrixXcd gaussian_matrix(Rng& rng, std::size_t n) {
  Eigen::MatrixXcd a(n, n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double re = rng.normal();
      const double im = rng.normal();
      a(p, q) = Complex(re, im);
    }
  return a;
}

}  // namespace

InstanceFile generate(const GenerateOptions& options) {
  if (options.dims.size() < 2) throw InvalidArgument("generate needs at least two parties");
  for (auto n : options.dims)
    if (n == 0) throw InvalidArgument("generate needs positive dimensions");
  if (!(options.floor > 0.0) || options.floor > 1.0)
    throw InvalidArgument("conditioning floor must lie in (0, 1]");

  Rng rng(options.seed);
  InstanceFile f;
  f.kind = options.kind;
  f.dims = options.dims;
  f.seed = options.seed;
  const std::size_t total = product(options.dims);

  if (options.kind == InstanceKind::classical) {
    f.cost.resize(total);
    for (auto& c : f.cost) c = rng.uniform(-1.0, 1.0);
    for (auto n : options.dims) f.marginals.push_back(positive_weights(rng, n, options.floor));
    f.name = "classical-" + std::to_string(options.seed);
    return f;
  }

  HermitianMatrix c;
  if (options.diagonal) {
    std::vector<double> d(total);
    double mx = 0.0;
    for (auto& v : d) {
      v = rng.uniform(-1.0, 1.0);
      mx = std::max(mx, std::abs(v));
    }
    for (auto& v : d) v /= std::max(mx, 1e-300);
    c = HermitianMatrix::diagonal(d);
  } else {
    const Eigen::MatrixXcd a = gaussian_matrix(rng, total);
    const HermitianMatrix h(a);
    c = h * (1.0 / spectral_bundle(h).spectral_norm);
  }
  f.cost = pairs_from_matrix(c);

  for (auto n : options.dims) {
    HermitianMatrix rho;
    if (options.diagonal) {
      rho = HermitianMatrix::diagonal(positive_weights(rng, n, options.floor));
    } else {
      Eigen::MatrixXcd b = gaussian_matrix(rng, n);
      b *= std::sqrt(static_cast<double>(n)) / b.norm();
      const Eigen::MatrixXcd m = b * b.adjoint() + options.floor * Eigen::MatrixXcd::Identity(n, n);
      rho = HermitianMatrix(m / (static_cast<double>(n) * (1.0 + options.floor)));
    }
    f.marginals.push_back(pairs_from_matrix(rho));
  }
  f.name = std::string(options.diagonal ? "quantum-diagonal-" : "quantum-") + std::to_string(options.seed);
  return f;
}

}  // namespace otb
