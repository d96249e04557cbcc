#include "irrigation/weights_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace irrigation::mlp {

namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

constexpr std::string_view kFormatName = "irrigation-mlp";

template <std::size_t Rows, std::size_t Cols>
ordered_json flatten_matrix(const std::array<std::array<double, Cols>, Rows>& m) {
  ordered_json out = ordered_json::array();
  for (const auto& row : m)
    for (double v : row) out.push_back(v);
  return out;
}

template <typename Container>
ordered_json to_array(const Container& values) {
  ordered_json out = ordered_json::array();
  for (double v : values) out.push_back(v);
  return out;
}

ordered_json range_json(Range r) { return ordered_json::array({r.min, r.max}); }

[[noreturn]] void fail(const std::string& what) { throw WeightsFormatError("weights file: " + what); }

const json& field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) fail(std::string("missing field \"") + name + "\"");
  return *it;
}

std::vector<double> numbers(const json& doc, const char* name, std::size_t expected) {
  const json& arr = field(doc, name);
  if (!arr.is_array()) fail(std::string("\"") + name + "\" is not an array");
  if (arr.size() != expected) {
    fail(std::string("\"") + name + "\" has " + std::to_string(arr.size()) + " entries, expected " +
         std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const json& v : arr) {
    if (!v.is_number()) fail(std::string("\"") + name + "\" contains a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

void expect_dimension(const json& layers, const char* name, std::size_t expected) {
  const json& v = field(layers, name);
  if (!v.is_number_integer() || v.get<long long>() != static_cast<long long>(expected)) {
    fail(std::string("layer dimension \"") + name + "\" must be " + std::to_string(expected));
  }
}

Range parse_range(const json& norm, const char* name) {
  const std::vector<double> v = numbers(norm, name, 2);
  return Range{v[0], v[1]};
}

}  // namespace

std::string serialize_model(const Model& model) {
  const NetworkWeights& w = model.weights;
  ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kWeightsFormatVersion;
  doc["layers"] = {{"inputs", kInputs}, {"hidden", kHidden}, {"outputs", kOutputs}};
  doc["hidden_activation"] = "sigmoid";
  doc["output_activation"] = "softmax";
  doc["classes"] = {"full", "half", "off"};
  doc["w_hidden"] = flatten_matrix(w.w_hidden);
  doc["b_hidden"] = to_array(w.b_hidden);
  doc["w_out"] = flatten_matrix(w.w_out);
  doc["b_out"] = to_array(w.b_out);
  doc["normalization"] = {{"temperature_c", range_json(model.ranges.temperature)},
                          {"humidity_pct", range_json(model.ranges.humidity)},
                          {"soil_moisture_pct", range_json(model.ranges.soil_moisture)}};
  doc["seed"] = model.seed;
  return doc.dump(2) + "\n";
}

Model parse_model(std::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail("not valid JSON");
  if (!doc.is_object()) fail("top level is not an object");

  const json& format = field(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kFormatName) fail("unknown format tag");
  const json& version = field(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kWeightsFormatVersion) {
    fail("unsupported version");
  }

  const json& layers = field(doc, "layers");
  if (!layers.is_object()) fail("\"layers\" is not an object");
  expect_dimension(layers, "inputs", kInputs);
  expect_dimension(layers, "hidden", kHidden);
  expect_dimension(layers, "outputs", kOutputs);

  NetworkWeights::Flat flat{};
  std::size_t n = 0;
  for (const auto& [name, count] :
       {std::pair{"w_hidden", kHidden * kInputs}, std::pair{"b_hidden", kHidden},
        std::pair{"w_out", kOutputs * kHidden}, std::pair{"b_out", kOutputs}}) {
    for (double v : numbers(doc, name, count)) flat[n++] = v;
  }

  Model model;
  model.weights = NetworkWeights::unflatten(flat);
  if (!model.weights.all_finite()) fail("non-finite weight");

  const json& norm = field(doc, "normalization");
  if (!norm.is_object()) fail("\"normalization\" is not an object");
  model.ranges.temperature = parse_range(norm, "temperature_c");
  model.ranges.humidity = parse_range(norm, "humidity_pct");
  model.ranges.soil_moisture = parse_range(norm, "soil_moisture_pct");
  try {
    model.ranges.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  const json& seed = field(doc, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    fail("\"seed\" is not a non-negative integer");
  }
  model.seed = seed.get<std::uint64_t>();
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << serialize_model(model);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightsFormatError("cannot open weights file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace irrigation::mlp
