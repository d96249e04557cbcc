#pragma once

// Versioned JSON document for trained models:
//
//   {"format":"irrigation-mlp","version":1,
//    "layers":{"inputs":3,"hidden":5,"outputs":3},
//    "hidden_activation":"sigmoid","output_activation":"softmax",
//    "classes":["full","half","off"],
//    "w_hidden":[...15, row-major hidden x input],"b_hidden":[...5],
//    "w_out":[...15, row-major output x hidden],"b_out":[...3],
//    "normalization":{"temperature_c":[min,max],"humidity_pct":[...],"soil_moisture_pct":[...]},
//    "seed":S}

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "irrigation/mlp.hpp"

namespace irrigation::mlp {

inline constexpr int kWeightsFormatVersion = 1;

class WeightsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic text: identical models serialize to identical bytes.
[[nodiscard]] std::string serialize_model(const Model& model);

/// Throws WeightsFormatError on bad JSON, wrong version, dimension mismatch or
/// non-finite values.
[[nodiscard]] Model parse_model(std::string_view text);

void save_model(const Model& model, const std::filesystem::path& path);
[[nodiscard]] Model load_model(const std::filesystem::path& path);

}  // namespace irrigation::mlp
