#pragma once

// JSON instance files and seeded instance generation.
//
//   {"kind": "classical" | "quantum", "dims": [n1, ..., nd],
//    "cost": [...], "marginals": [[...], ...], "name": "...", "seed": 7}
//
// Classical cost is the row-major tensor; quantum cost and marginals are
// row-major matrices stored as interleaved (re, im) pairs.

#include "otbarrier/classical.hpp"
#include "otbarrier/quantum.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace otb {

enum class InstanceKind { classical, quantum };

struct InstanceFile {
  InstanceKind kind = InstanceKind::classical;
  Dims dims;
  std::vector<double> cost;
  std::vector<std::vector<double>> marginals;
  std::string name;
  std::optional<std::uint64_t> seed;
};

std::string to_json(const InstanceFile& file);
InstanceFile parse_instance(const std::string& text);
InstanceFile read_instance_file(const std::string& path);
void write_instance_file(const std::string& path, const InstanceFile& file);

ClassicalInstance to_classical(const InstanceFile& file);
QuantumInstance to_quantum(const InstanceFile& file);
InstanceFile from_classical(const ClassicalInstance& inst, const std::string& name = {});
InstanceFile from_quantum(const QuantumInstance& inst, const std::string& name = {});

using Instance = std::variant<ClassicalInstance, QuantumInstance>;

/// Parses, validates and converts; throws InputError, DimensionMismatch or
/// PositivityError with the offending field named.
Instance load_instance(const std::string& path);

struct GenerateOptions {
  InstanceKind kind = InstanceKind::classical;
  Dims dims;
  std::uint64_t seed = 1;
  double floor = 0.1;     // conditioning floor
  bool diagonal = false;  // quantum only
};

InstanceFile generate(const GenerateOptions& options);

}  // namespace otb
