#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsdgnn/conversation.hpp"
#include "lsdgnn/wheel.hpp"

namespace lsdgnn {

struct ModalityDims {
  std::size_t text = 0;
  std::size_t audio = 0;
  std::size_t visual = 0;

  std::size_t total() const { return text + audio + visual; }
  bool operator==(const ModalityDims& o) const {
    return text == o.text && audio == o.audio && visual == o.visual;
  }
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> emotion_labels;
  ModalityDims modality_dims;
  // Present only when the file carried one; resolve_wheel falls back to the
  // built-in coordinates for the manifest's labels.
  std::optional<EmotionWheel> wheel;
  std::vector<Conversation> conversations;

  std::size_t num_utterances() const;
  const Conversation& by_id(const std::string& id) const;  // LookupError
};

EmotionWheel resolve_wheel(const DatasetManifest& manifest);

// Throws on any structural violation, naming the conversation/utterance.
void validate_manifest(const DatasetManifest& manifest);

// Line-delimited format: a header object, then one conversation object per
// line. Canonical serialization round-trips byte-identically.
DatasetManifest parse_dataset(const std::string& text);
std::string serialize_dataset(const DatasetManifest& manifest);
DatasetManifest load_dataset(const std::string& path);
void save_dataset(const DatasetManifest& manifest, const std::string& path);

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

struct SynthConfig {
  std::size_t num_conversations = 20;
  CountRange speakers{2, 3};
  CountRange utterances{6, 10};
  double shift_probability = 0.3;   // same-speaker consecutive emotion change
  double separation = 4.0;          // pairwise distance between class means
  double noise_std = 1.0;
  std::size_t num_classes = 6;
  ModalityDims modality_dims{8, 4, 4};
  std::uint64_t seed = 1;

  void validate() const;
};

SynthConfig parse_synth_config(const std::string& json_text);
SynthConfig load_synth_config(const std::string& path);
std::string serialize_synth_config(const SynthConfig& config);

// Per speaker the emotion follows a stay-or-jump Markov chain; features per
// modality are class-conditional spherical Gaussians whose means sit
// `separation` apart. Deterministic under config.seed.
DatasetManifest generate_synthetic(const SynthConfig& config);

// Conversation-level split, seeded shuffle, largest-remainder counts.
std::array<DatasetManifest, 3> split_dataset(const DatasetManifest& manifest,
                                             const std::array<double, 3>& fractions,
                                             std::uint64_t seed);

}  // namespace lsdgnn
