#include "lsdgnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsdgnn/format.hpp"
#include "lsdgnn/shuffle.hpp"

namespace lsdgnn {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& synthetic_label_pool() {
  static const std::vector<std::string> pool = {
      "happy",      "sad",     "neutral",  "angry", "excited",
      "frustrated", "fear",    "disgust",  "surprise", "joy"};
  return pool;
}

[[noreturn]] void line_error(std::size_t line, const std::string& message) {
  throw ParseError("dataset line " + std::to_string(line) + ": " + message);
}

void require_keys(const ordered_json& object,
                  const std::vector<std::string>& keys, std::size_t line,
                  const std::string& what) {
  for (const std::string& key : keys) {
    if (!object.contains(key)) {
      line_error(line, what + " is missing key '" + key + "'");
    }
  }
  for (const auto& item : object.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      line_error(line, what + " has unknown key '" + item.key() + "'");
    }
  }
}

std::vector<double> parse_features(const ordered_json& value, std::size_t line,
                                   const std::string& what) {
  if (!value.is_array()) {
    line_error(line, what + " must be an array of numbers");
  }
  std::vector<double> features;
  features.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_number()) {
      line_error(line, what + " must contain only numbers");
    }
    features.push_back(item.get<double>());
  }
  return features;
}

ordered_json wheel_to_json(const EmotionWheel& wheel) {
  ordered_json out = ordered_json::object();
  for (const auto& [label, point] : wheel.entries()) {
    out[label] = {{"valence", point.valence}, {"arousal", point.arousal}};
  }
  return out;
}

}  // namespace

std::size_t DatasetManifest::num_utterances() const {
  std::size_t total = 0;
  for (const Conversation& c : conversations) total += c.size();
  return total;
}

const Conversation& DatasetManifest::by_id(const std::string& id) const {
  for (const Conversation& c : conversations) {
    if (c.id == id) return c;
  }
  throw LookupError("dataset: unknown conversation id '" + id + "'");
}

EmotionWheel resolve_wheel(const DatasetManifest& manifest) {
  if (manifest.wheel.has_value()) return *manifest.wheel;
  return EmotionWheel::default_for(manifest.emotion_labels);
}

void validate_manifest(const DatasetManifest& manifest) {
  if (manifest.emotion_labels.empty()) {
    throw DataError("dataset '" + manifest.name + "': no emotion labels");
  }
  for (std::size_t i = 0; i < manifest.emotion_labels.size(); ++i) {
    const std::string& label = manifest.emotion_labels[i];
    if (label.empty()) {
      throw DataError("dataset '" + manifest.name + "': empty label at " +
                      std::to_string(i));
    }
    for (std::size_t j = i + 1; j < manifest.emotion_labels.size(); ++j) {
      if (label == manifest.emotion_labels[j]) {
        throw DataError("dataset '" + manifest.name + "': duplicate label '" +
                        label + "'");
      }
    }
  }
  if (manifest.modality_dims.total() == 0) {
    throw DataError("dataset '" + manifest.name +
                    "': all modality widths are zero");
  }
  if (manifest.wheel.has_value()) {
    for (const std::string& label : manifest.emotion_labels) {
      if (!manifest.wheel->has(label)) {
        throw DataError("dataset '" + manifest.name + "': wheel lacks label '" +
                        label + "'");
      }
    }
  }

  const int num_classes = static_cast<int>(manifest.emotion_labels.size());
  std::vector<std::string> seen_ids;
  for (const Conversation& conv : manifest.conversations) {
    if (conv.id.empty()) {
      throw DataError("dataset '" + manifest.name +
                      "': conversation with empty id");
    }
    if (std::find(seen_ids.begin(), seen_ids.end(), conv.id) !=
        seen_ids.end()) {
      throw DataError("dataset '" + manifest.name +
                      "': duplicate conversation id '" + conv.id + "'");
    }
    seen_ids.push_back(conv.id);
    if (conv.utterances.empty()) {
      throw DataError("conversation '" + conv.id + "': no utterances");
    }
    for (std::size_t pos = 0; pos < conv.utterances.size(); ++pos) {
      const Utterance& u = conv.utterances[pos];
      const std::string where =
          "conversation '" + conv.id + "' utterance " + std::to_string(pos + 1);
      if (u.index != pos + 1) {
        throw DataError(where + ": index " + std::to_string(u.index) +
                        " breaks the contiguous 1..N ordering");
      }
      if (u.speaker.empty()) {
        throw DataError(where + ": empty speaker");
      }
      if (u.label.has_value() && (*u.label < 0 || *u.label >= num_classes)) {
        throw DataError(where + ": label " + std::to_string(*u.label) +
                        " out of range [0," + std::to_string(num_classes) +
                        ")");
      }
      if (u.text_feat.size() != manifest.modality_dims.text ||
          u.audio_feat.size() != manifest.modality_dims.audio ||
          u.visual_feat.size() != manifest.modality_dims.visual) {
        throw DataError(
            where + ": feature widths (" + std::to_string(u.text_feat.size()) +
            "," + std::to_string(u.audio_feat.size()) + "," +
            std::to_string(u.visual_feat.size()) +
            ") do not match modality_dims (" +
            std::to_string(manifest.modality_dims.text) + "," +
            std::to_string(manifest.modality_dims.audio) + "," +
            std::to_string(manifest.modality_dims.visual) + ")");
      }
      for (double v : u.text_feat) {
        if (!std::isfinite(v)) throw DataError(where + ": non-finite feature");
      }
      for (double v : u.audio_feat) {
        if (!std::isfinite(v)) throw DataError(where + ": non-finite feature");
      }
      for (double v : u.visual_feat) {
        if (!std::isfinite(v)) throw DataError(where + ": non-finite feature");
      }
    }
  }
}

DatasetManifest parse_dataset(const std::string& text) {
  std::istringstream stream(text);
  std::string line;
  std::size_t line_number = 0;

  DatasetManifest manifest;
  bool header_seen = false;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.empty()) continue;
    ordered_json parsed;
    try {
      parsed = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      line_error(line_number, e.what());
    }
    if (!parsed.is_object()) {
      line_error(line_number, "expected an object");
    }

    if (!header_seen) {
      header_seen = true;
      std::vector<std::string> keys = {"name", "emotion_labels",
                                       "modality_dims"};
      if (parsed.contains("wheel")) keys.push_back("wheel");
      require_keys(parsed, keys, line_number, "header");
      if (!parsed["name"].is_string()) {
        line_error(line_number, "header name must be a string");
      }
      manifest.name = parsed["name"].get<std::string>();
      if (!parsed["emotion_labels"].is_array()) {
        line_error(line_number, "header emotion_labels must be an array");
      }
      for (const auto& item : parsed["emotion_labels"]) {
        if (!item.is_string()) {
          line_error(line_number, "emotion_labels must contain strings");
        }
        manifest.emotion_labels.push_back(item.get<std::string>());
      }
      const ordered_json& dims = parsed["modality_dims"];
      require_keys(dims, {"text", "audio", "visual"}, line_number,
                   "modality_dims");
      for (const char* key : {"text", "audio", "visual"}) {
        if (!dims[key].is_number_unsigned()) {
          line_error(line_number, std::string("modality_dims.") + key +
                                      " must be a nonnegative integer");
        }
      }
      manifest.modality_dims.text = dims["text"].get<std::size_t>();
      manifest.modality_dims.audio = dims["audio"].get<std::size_t>();
      manifest.modality_dims.visual = dims["visual"].get<std::size_t>();
      if (parsed.contains("wheel")) {
        manifest.wheel = parse_wheel(parsed["wheel"].dump());
      }
      continue;
    }

    require_keys(parsed, {"id", "utterances"}, line_number, "conversation");
    if (!parsed["id"].is_string()) {
      line_error(line_number, "conversation id must be a string");
    }
    Conversation conv;
    conv.id = parsed["id"].get<std::string>();
    if (!parsed["utterances"].is_array()) {
      line_error(line_number, "utterances must be an array");
    }
    for (const auto& u_json : parsed["utterances"]) {
      if (!u_json.is_object()) {
        line_error(line_number, "utterance must be an object");
      }
      require_keys(u_json,
                   {"index", "speaker", "label", "text_feat", "audio_feat",
                    "visual_feat"},
                   line_number, "utterance");
      Utterance u;
      if (!u_json["index"].is_number_unsigned()) {
        line_error(line_number, "utterance index must be a positive integer");
      }
      u.index = u_json["index"].get<std::size_t>();
      if (!u_json["speaker"].is_string()) {
        line_error(line_number, "speaker must be a string");
      }
      u.speaker = u_json["speaker"].get<std::string>();
      if (u_json["label"].is_null()) {
        u.label = std::nullopt;
      } else if (u_json["label"].is_number_integer()) {
        u.label = u_json["label"].get<int>();
      } else {
        line_error(line_number, "label must be an integer or null");
      }
      u.text_feat = parse_features(u_json["text_feat"], line_number,
                                   "text_feat");
      u.audio_feat = parse_features(u_json["audio_feat"], line_number,
                                    "audio_feat");
      u.visual_feat = parse_features(u_json["visual_feat"], line_number,
                                     "visual_feat");
      conv.utterances.push_back(std::move(u));
    }
    manifest.conversations.push_back(std::move(conv));
  }

  if (!header_seen) {
    throw ParseError("dataset: empty file, expected a header line");
  }
  validate_manifest(manifest);
  return manifest;
}

std::string serialize_dataset(const DatasetManifest& manifest) {
  std::ostringstream out;
  ordered_json header;
  header["name"] = manifest.name;
  header["emotion_labels"] = manifest.emotion_labels;
  header["modality_dims"] = {{"text", manifest.modality_dims.text},
                             {"audio", manifest.modality_dims.audio},
                             {"visual", manifest.modality_dims.visual}};
  if (manifest.wheel.has_value()) {
    header["wheel"] = wheel_to_json(*manifest.wheel);
  }
  out << header.dump() << '\n';

  for (const Conversation& conv : manifest.conversations) {
    ordered_json conv_json;
    conv_json["id"] = conv.id;
    ordered_json utterances = ordered_json::array();
    for (const Utterance& u : conv.utterances) {
      ordered_json u_json;
      u_json["index"] = u.index;
      u_json["speaker"] = u.speaker;
      if (u.label.has_value()) {
        u_json["label"] = *u.label;
      } else {
        u_json["label"] = nullptr;
      }
      u_json["text_feat"] = u.text_feat;
      u_json["audio_feat"] = u.audio_feat;
      u_json["visual_feat"] = u.visual_feat;
      utterances.push_back(std::move(u_json));
    }
    conv_json["utterances"] = std::move(utterances);
    out << conv_json.dump() << '\n';
  }
  return out.str();
}

DatasetManifest load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("dataset: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

void save_dataset(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("dataset: cannot write '" + path + "'");
  }
  out << serialize_dataset(manifest);
}

void SynthConfig::validate() const {
  if (num_conversations < 1) {
    throw ConfigError("synth: num_conversations must be at least 1");
  }
  if (speakers.lo < 1 || speakers.lo > speakers.hi) {
    throw ConfigError("synth: speaker range is empty");
  }
  if (utterances.lo < 1 || utterances.lo > utterances.hi) {
    throw ConfigError("synth: utterance range is empty");
  }
  if (!(shift_probability >= 0.0 && shift_probability <= 1.0)) {
    throw ConfigError("synth: shift_probability must lie in [0, 1]");
  }
  if (!(separation > 0.0)) {
    throw ConfigError("synth: separation must be positive");
  }
  if (!(noise_std > 0.0)) {
    throw ConfigError("synth: noise_std must be positive");
  }
  if (num_classes < 1 || num_classes > synthetic_label_pool().size()) {
    throw ConfigError("synth: num_classes must lie in [1, " +
                      std::to_string(synthetic_label_pool().size()) + "]");
  }
  if (modality_dims.total() == 0) {
    throw ConfigError("synth: all modality widths are zero");
  }
}

SynthConfig parse_synth_config(const std::string& json_text) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  if (!parsed.is_object()) {
    throw FormatError("synth config: top level must be an object");
  }
  SynthConfig config;
  const std::vector<std::string> known = {
      "num_conversations", "speakers",    "utterances",  "shift_probability",
      "separation",        "noise_std",   "num_classes", "modality_dims",
      "seed"};
  for (const auto& item : parsed.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("synth config: unknown key '" + item.key() + "'");
    }
  }
  auto read_range = [&](const char* key, CountRange& range) {
    if (!parsed.contains(key)) return;
    const ordered_json& value = parsed[key];
    if (!value.is_array() || value.size() != 2 ||
        !value[0].is_number_unsigned() || !value[1].is_number_unsigned()) {
      throw ConfigError(std::string("synth config: ") + key +
                        " must be [lo, hi]");
    }
    range.lo = value[0].get<std::size_t>();
    range.hi = value[1].get<std::size_t>();
  };
  auto read_count = [&](const char* key, std::size_t& field) {
    if (!parsed.contains(key)) return;
    if (!parsed[key].is_number_unsigned()) {
      throw ConfigError(std::string("synth config: ") + key +
                        " must be a nonnegative integer");
    }
    field = parsed[key].get<std::size_t>();
  };
  auto read_number = [&](const char* key, double& field) {
    if (!parsed.contains(key)) return;
    if (!parsed[key].is_number()) {
      throw ConfigError(std::string("synth config: ") + key +
                        " must be a number");
    }
    field = parsed[key].get<double>();
  };
  read_count("num_conversations", config.num_conversations);
  read_range("speakers", config.speakers);
  read_range("utterances", config.utterances);
  read_number("shift_probability", config.shift_probability);
  read_number("separation", config.separation);
  read_number("noise_std", config.noise_std);
  read_count("num_classes", config.num_classes);
  if (parsed.contains("modality_dims")) {
    const ordered_json& dims = parsed["modality_dims"];
    if (!dims.is_object() || dims.size() != 3 || !dims.contains("text") ||
        !dims.contains("audio") || !dims.contains("visual") ||
        !dims["text"].is_number_unsigned() ||
        !dims["audio"].is_number_unsigned() ||
        !dims["visual"].is_number_unsigned()) {
      throw ConfigError(
          "synth config: modality_dims must be {text, audio, visual} counts");
    }
    config.modality_dims.text = dims["text"].get<std::size_t>();
    config.modality_dims.audio = dims["audio"].get<std::size_t>();
    config.modality_dims.visual = dims["visual"].get<std::size_t>();
  }
  if (parsed.contains("seed")) {
    if (!parsed["seed"].is_number_unsigned()) {
      throw ConfigError("synth config: seed must be a nonnegative integer");
    }
    config.seed = parsed["seed"].get<std::uint64_t>();
  }
  config.validate();
  return config;
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("synth config: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_synth_config(buffer.str());
}

std::string serialize_synth_config(const SynthConfig& config) {
  ordered_json out;
  out["num_conversations"] = config.num_conversations;
  out["speakers"] = {config.speakers.lo, config.speakers.hi};
  out["utterances"] = {config.utterances.lo, config.utterances.hi};
  out["shift_probability"] = config.shift_probability;
  out["separation"] = config.separation;
  out["noise_std"] = config.noise_std;
  out["num_classes"] = config.num_classes;
  out["modality_dims"] = {{"text", config.modality_dims.text},
                          {"audio", config.modality_dims.audio},
                          {"visual", config.modality_dims.visual}};
  out["seed"] = config.seed;
  return out.dump() + "\n";
}

DatasetManifest generate_synthetic(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DatasetManifest manifest;
  manifest.name = "synthetic";
  manifest.emotion_labels.assign(
      synthetic_label_pool().begin(),
      synthetic_label_pool().begin() +
          static_cast<std::ptrdiff_t>(config.num_classes));
  manifest.modality_dims = config.modality_dims;

  auto draw_features = [&](std::size_t width, std::size_t klass) {
    std::vector<double> features(width);
    for (std::size_t d = 0; d < width; ++d) {
      double mean =
          d == 0 ? static_cast<double>(klass) * config.separation : 0.0;
      features[d] = mean + gauss(rng) * config.noise_std;
    }
    return features;
  };

  for (std::size_t c = 0; c < config.num_conversations; ++c) {
    Conversation conv;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06zu", c + 1);
    conv.id = id;

    const std::size_t n_speakers =
        config.speakers.lo +
        (config.speakers.hi > config.speakers.lo
             ? rng() % (config.speakers.hi - config.speakers.lo + 1)
             : 0);
    const std::size_t n_utterances =
        config.utterances.lo +
        (config.utterances.hi > config.utterances.lo
             ? rng() % (config.utterances.hi - config.utterances.lo + 1)
             : 0);

    std::vector<int> current_label(n_speakers, -1);
    for (std::size_t i = 1; i <= n_utterances; ++i) {
      const std::size_t speaker = rng() % n_speakers;
      int label;
      if (current_label[speaker] < 0) {
        label = static_cast<int>(rng() % config.num_classes);
      } else if (config.num_classes >= 2 &&
                 uniform01(rng) < config.shift_probability) {
        // Jump to a uniformly random different class.
        int offset = static_cast<int>(rng() % (config.num_classes - 1));
        label = offset >= current_label[speaker] ? offset + 1 : offset;
      } else {
        label = current_label[speaker];
      }
      current_label[speaker] = label;

      Utterance u;
      u.index = i;
      u.speaker = "S" + std::to_string(speaker + 1);
      u.label = label;
      const std::size_t klass = static_cast<std::size_t>(label);
      u.text_feat = draw_features(config.modality_dims.text, klass);
      u.audio_feat = draw_features(config.modality_dims.audio, klass);
      u.visual_feat = draw_features(config.modality_dims.visual, klass);
      conv.utterances.push_back(std::move(u));
    }
    manifest.conversations.push_back(std::move(conv));
  }
  validate_manifest(manifest);
  return manifest;
}

std::array<DatasetManifest, 3> split_dataset(
    const DatasetManifest& manifest, const std::array<double, 3>& fractions,
    std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) {
      throw ConfigError("split: fractions must be positive");
    }
    total += f;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ConfigError("split: fractions sum to " + format_double(total) +
                      ", expected 1");
  }
  const std::size_t n = manifest.conversations.size();

  // Largest-remainder apportionment, ties by split order.
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    double target = fractions[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(target);
    remainders[s] = target - static_cast<double>(counts[s]);
    assigned += counts[s];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (remainders[s] > remainders[best]) best = s;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (counts[s] == 0) {
      throw ConfigError("split: " + std::to_string(n) +
                        " conversations cannot fill all three splits");
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);

  std::array<DatasetManifest, 3> result;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<std::size_t> indices(
        order.begin() + static_cast<std::ptrdiff_t>(cursor),
        order.begin() + static_cast<std::ptrdiff_t>(cursor + counts[s]));
    cursor += counts[s];
    std::sort(indices.begin(), indices.end());
    result[s].name = manifest.name;
    result[s].emotion_labels = manifest.emotion_labels;
    result[s].modality_dims = manifest.modality_dims;
    result[s].wheel = manifest.wheel;
    for (std::size_t idx : indices) {
      result[s].conversations.push_back(manifest.conversations[idx]);
    }
  }
  return result;
}

}  // namespace lsdgnn
