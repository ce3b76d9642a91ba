#include "lsdgnn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lsdgnn {

namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  ordered_json out;
  out["format_version"] = checkpoint.format_version;
  out["config"] = ordered_json::parse(serialize_run_config(checkpoint.config));
  out["epoch"] = checkpoint.epoch;
  out["rng_state"] = checkpoint.rng_state;
  ordered_json parameters = ordered_json::array();
  for (const auto& [name, tensor] : checkpoint.parameters) {
    ordered_json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape();
    entry["data"] = tensor.data();
    parameters.push_back(std::move(entry));
  }
  out["parameters"] = std::move(parameters);
  return out.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (!parsed.is_object()) {
    throw FormatError("checkpoint: top level must be an object");
  }
  for (const char* key :
       {"format_version", "config", "epoch", "rng_state", "parameters"}) {
    if (!parsed.contains(key)) {
      throw FormatError(std::string("checkpoint: missing key '") + key + "'");
    }
  }
  if (!parsed["format_version"].is_number_integer()) {
    throw FormatError("checkpoint: format_version must be an integer");
  }
  Checkpoint checkpoint;
  checkpoint.format_version = parsed["format_version"].get<int>();
  if (checkpoint.format_version != kCheckpointFormatVersion) {
    throw VersionError(
        "checkpoint: format_version " +
        std::to_string(checkpoint.format_version) +
        " is not supported (this build reads version " +
        std::to_string(kCheckpointFormatVersion) + ")");
  }
  checkpoint.config = parse_run_config(parsed["config"].dump());
  if (!parsed["epoch"].is_number_unsigned()) {
    throw FormatError("checkpoint: epoch must be a nonnegative integer");
  }
  checkpoint.epoch = parsed["epoch"].get<std::size_t>();
  if (!parsed["rng_state"].is_string()) {
    throw FormatError("checkpoint: rng_state must be a string");
  }
  checkpoint.rng_state = parsed["rng_state"].get<std::string>();
  if (!parsed["parameters"].is_array()) {
    throw FormatError("checkpoint: parameters must be an array");
  }
  for (const auto& entry : parsed["parameters"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry.contains("shape") || !entry.contains("data") ||
        !entry["name"].is_string() || !entry["shape"].is_array() ||
        !entry["data"].is_array()) {
      throw FormatError("checkpoint: malformed parameter entry");
    }
    Shape shape;
    for (const auto& d : entry["shape"]) {
      if (!d.is_number_unsigned()) {
        throw FormatError("checkpoint: parameter shape must hold counts");
      }
      shape.push_back(d.get<std::size_t>());
    }
    std::vector<double> data;
    data.reserve(entry["data"].size());
    for (const auto& value : entry["data"]) {
      if (!value.is_number()) {
        throw FormatError("checkpoint: parameter data must hold numbers");
      }
      data.push_back(value.get<double>());
    }
    checkpoint.parameters.add(
        entry["name"].get<std::string>(),
        Tensor::from_data(std::move(shape), std::move(data)));
  }
  return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("checkpoint: cannot write '" + path + "'");
  }
  out << serialize_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("checkpoint: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace lsdgnn
