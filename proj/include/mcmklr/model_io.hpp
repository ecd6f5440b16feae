#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "mcmklr/data_io.hpp"
#include "mcmklr/klr_fast.hpp"
#include "mcmklr/multiclass.hpp"

namespace mcmklr {

using AnyModel = std::variant<BinaryModel, MulticlassModel>;

/// A trained model plus the feature scaling applied before training (empty
/// when none).
struct ModelFile {
  AnyModel model;
  MinMaxScaler scaler;
};

/// MCMKLR1 layout: the magic line "MCMKLR1", `key=value` header lines in a fixed
/// order, a blank line, then little-endian float64 arrays: the column, each
/// alpha, then the training features row-major. Header reals are written in
/// shortest round-trip form, so a load reproduces every value bit-exactly.
void write_model(const ModelFile& file, std::ostream& out);
ModelFile read_model(std::istream& in);

void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace mcmklr
