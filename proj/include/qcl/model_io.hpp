#pragma once

#include <filesystem>

#include <json.hpp>

#include "qcl/measures.hpp"
#include "qcl/model.hpp"

namespace qcl {

inline constexpr int kModelSchemaVersion = 1;

/// Full document: every table written out, complex numbers as [re, im].
nlohmann::ordered_json model_to_json(const ModelSpec& spec);

/// Accepts the full document or generator shorthand (lattice modes, constant or
/// relativistic dispersion, nelson/polaron/pauli_fierz form-factor generators,
/// built-in potentials). The result is validated; failures throw ModelError.
ModelSpec model_from_json(const nlohmann::json& doc);

ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& spec, const std::filesystem::path& path);

nlohmann::ordered_json complex_array(const CVector& v);
CVector complex_vector_from_json(const nlohmann::json& a);

/// Model document extended with an "atoms" array of {weight, z, psi}.
nlohmann::ordered_json measure_to_json(const ModelSpec& spec, const AtomicStateMeasure& measure);

}  // namespace qcl
