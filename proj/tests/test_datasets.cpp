#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lsdgnn/dataset.hpp"
#include "support/temp_dir.hpp"

using namespace lsdgnn;
using lsdgnn::testing::TempDir;

namespace {

DatasetManifest minimal_manifest() {
  DatasetManifest m;
  m.name = "mini";
  m.emotion_labels = {"happy", "sad"};
  m.modality_dims = {2, 1, 0};
  Conversation conv;
  conv.id = "c1";
  Utterance u;
  u.index = 1;
  u.speaker = "A";
  u.label = 0;
  u.text_feat = {0.5, -1.25};
  u.audio_feat = {3.0};
  conv.utterances.push_back(u);
  m.conversations.push_back(conv);
  return m;
}

const char* kMinimalText =
    "{\"name\":\"mini\",\"emotion_labels\":[\"happy\",\"sad\"],"
    "\"modality_dims\":{\"text\":2,\"audio\":1,\"visual\":0}}\n"
    "{\"id\":\"c1\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
    "\"label\":0,\"text_feat\":[0.5,-1.25],\"audio_feat\":[3.0],"
    "\"visual_feat\":[]}]}\n";

}  // namespace

TEST_CASE("minimal dataset parses and round-trips byte identically") {
  DatasetManifest parsed = parse_dataset(kMinimalText);
  CHECK(parsed.name == "mini");
  CHECK(parsed.emotion_labels == std::vector<std::string>{"happy", "sad"});
  CHECK(parsed.modality_dims.total() == 3);
  REQUIRE(parsed.conversations.size() == 1);
  CHECK(parsed.num_utterances() == 1);
  CHECK(parsed.by_id("c1").utterances[0].speaker == "A");
  CHECK_THROWS_AS(parsed.by_id("nope"), LookupError);
  CHECK_FALSE(parsed.wheel.has_value());

  std::string canonical = serialize_dataset(minimal_manifest());
  CHECK(serialize_dataset(parse_dataset(canonical)) == canonical);

  SUBCASE("blank lines are skipped") {
    std::string padded = std::string("\n") + kMinimalText + "\n\n";
    CHECK(serialize_dataset(parse_dataset(padded)) == canonical);
  }
  SUBCASE("save and load through a file") {
    TempDir dir;
    save_dataset(minimal_manifest(), dir.file("d.jsonl"));
    CHECK(serialize_dataset(load_dataset(dir.file("d.jsonl"))) == canonical);
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("absent.jsonl")),
                         doctest::Contains("cannot open"), ParseError);
  }
}

TEST_CASE("header parse failures carry the line number") {
  CHECK_THROWS_WITH_AS(parse_dataset(""), doctest::Contains("empty file"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_dataset("not json\n"),
                       doctest::Contains("dataset line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_dataset("[1,2]\n"),
                       doctest::Contains("expected an object"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset("{\"name\":\"x\",\"emotion_labels\":[\"a\"]}\n"),
      doctest::Contains("missing key 'modality_dims'"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(
          "{\"name\":\"x\",\"emotion_labels\":[\"a\"],\"modality_dims\":"
          "{\"text\":1,\"audio\":0,\"visual\":0},\"extra\":1}\n"),
      doctest::Contains("unknown key 'extra'"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset("{\"name\":\"x\",\"emotion_labels\":[3],\"modality_dims\":"
                    "{\"text\":1,\"audio\":0,\"visual\":0}}\n"),
      doctest::Contains("emotion_labels must contain strings"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset("{\"name\":\"x\",\"emotion_labels\":[\"a\"],"
                    "\"modality_dims\":{\"text\":-1,\"audio\":0,\"visual\":0}}"
                    "\n"),
      doctest::Contains("modality_dims.text"), ParseError);
}

TEST_CASE("conversation parse failures carry the line number") {
  const std::string header =
      "{\"name\":\"x\",\"emotion_labels\":[\"a\",\"b\"],\"modality_dims\":"
      "{\"text\":1,\"audio\":0,\"visual\":0}}\n";
  auto with_line_2 = [&](const std::string& line) { return header + line; };

  CHECK_THROWS_WITH_AS(parse_dataset(with_line_2("{\"id\":\"c\"}\n")),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(with_line_2("{\"id\":\"c\",\"utterances\":3}\n")),
      doctest::Contains("utterances must be an array"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(with_line_2(
          "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
          "\"label\":0,\"text_feat\":[0.0],\"audio_feat\":[]}]}\n")),
      doctest::Contains("missing key 'visual_feat'"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(with_line_2(
          "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
          "\"label\":0.5,\"text_feat\":[0.0],\"audio_feat\":[],"
          "\"visual_feat\":[]}]}\n")),
      doctest::Contains("label must be an integer or null"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(with_line_2(
          "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
          "\"label\":0,\"text_feat\":[\"x\"],\"audio_feat\":[],"
          "\"visual_feat\":[]}]}\n")),
      doctest::Contains("only numbers"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dataset(with_line_2(
          "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
          "\"label\":0,\"text_feat\":[0.0],\"audio_feat\":[],"
          "\"visual_feat\":[],\"mood\":\"?\"}]}\n")),
      doctest::Contains("unknown key 'mood'"), ParseError);
  // An unlabeled utterance is legal; the label is null, not absent.
  DatasetManifest unlabeled = parse_dataset(with_line_2(
      "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
      "\"label\":null,\"text_feat\":[0.0],\"audio_feat\":[],"
      "\"visual_feat\":[]}]}\n"));
  CHECK_FALSE(unlabeled.conversations[0].utterances[0].label.has_value());
}

TEST_CASE("manifest validation names the offending pieces") {
  SUBCASE("label list problems") {
    DatasetManifest m = minimal_manifest();
    m.emotion_labels.clear();
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("no emotion labels"), DataError);
    m.emotion_labels = {"happy", "happy"};
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("duplicate label 'happy'"),
                         DataError);
    m.emotion_labels = {"happy", ""};
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("empty label at 1"), DataError);
  }
  SUBCASE("zero modality widths") {
    DatasetManifest m = minimal_manifest();
    m.modality_dims = {0, 0, 0};
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("all modality widths are zero"),
                         DataError);
  }
  SUBCASE("wheel must cover the label set") {
    DatasetManifest m = minimal_manifest();
    m.wheel = EmotionWheel::default_for({"happy"});
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("wheel lacks label 'sad'"),
                         DataError);
  }
  SUBCASE("conversation identity") {
    DatasetManifest m = minimal_manifest();
    m.conversations.push_back(m.conversations[0]);
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("duplicate conversation id 'c1'"),
                         DataError);
    m.conversations.pop_back();
    m.conversations[0].id = "";
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("empty id"), DataError);
    m.conversations[0].id = "c1";
    m.conversations[0].utterances.clear();
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("conversation 'c1': no utterances"),
                         DataError);
  }
  SUBCASE("utterance contracts") {
    DatasetManifest m = minimal_manifest();
    m.conversations[0].utterances[0].index = 3;
    CHECK_THROWS_WITH_AS(
        validate_manifest(m),
        doctest::Contains("index 3 breaks the contiguous 1..N ordering"),
        DataError);
    m = minimal_manifest();
    m.conversations[0].utterances[0].speaker = "";
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("utterance 1: empty speaker"),
                         DataError);
    m = minimal_manifest();
    m.conversations[0].utterances[0].label = 2;
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("label 2 out of range [0,2)"),
                         DataError);
    m = minimal_manifest();
    m.conversations[0].utterances[0].text_feat = {1.0};
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("do not match modality_dims"),
                         DataError);
    m = minimal_manifest();
    m.conversations[0].utterances[0].audio_feat = {std::nan("")};
    CHECK_THROWS_WITH_AS(validate_manifest(m),
                         doctest::Contains("non-finite feature"), DataError);
  }
  SUBCASE("parse runs full validation") {
    std::string text =
        "{\"name\":\"x\",\"emotion_labels\":[\"a\",\"b\"],\"modality_dims\":"
        "{\"text\":1,\"audio\":0,\"visual\":0}}\n"
        "{\"id\":\"c\",\"utterances\":[{\"index\":1,\"speaker\":\"A\","
        "\"label\":2,\"text_feat\":[0.0],\"audio_feat\":[],"
        "\"visual_feat\":[]}]}\n";
    CHECK_THROWS_WITH_AS(parse_dataset(text),
                         doctest::Contains("conversation 'c' utterance 1"),
                         DataError);
  }
}

TEST_CASE("embedded wheel round-trips and feeds resolve_wheel") {
  DatasetManifest m = minimal_manifest();
  CHECK(resolve_wheel(m) == EmotionWheel::default_for(m.emotion_labels));

  m.wheel = EmotionWheel::from_points({{"happy", {1.0, 0.0}},
                                       {"sad", {-1.0, 0.0}},
                                       {"calm", {0.0, -1.0}}});
  std::string text = serialize_dataset(m);
  CHECK(text.find("\"wheel\"") != std::string::npos);
  DatasetManifest parsed = parse_dataset(text);
  REQUIRE(parsed.wheel.has_value());
  CHECK(*parsed.wheel == *m.wheel);
  CHECK(resolve_wheel(parsed) == *m.wheel);
  CHECK(serialize_dataset(parsed) == text);
}

TEST_CASE("synth config serialization and validation") {
  SUBCASE("defaults round trip") {
    SynthConfig config;
    config.num_conversations = 7;
    config.speakers = {2, 4};
    config.utterances = {5, 9};
    config.shift_probability = 0.25;
    config.separation = 3.5;
    config.noise_std = 0.5;
    config.num_classes = 4;
    config.modality_dims = {3, 2, 1};
    config.seed = 99;
    SynthConfig reparsed = parse_synth_config(serialize_synth_config(config));
    CHECK(reparsed.num_conversations == 7);
    CHECK(reparsed.speakers.lo == 2);
    CHECK(reparsed.speakers.hi == 4);
    CHECK(reparsed.utterances.lo == 5);
    CHECK(reparsed.utterances.hi == 9);
    CHECK(reparsed.shift_probability == 0.25);
    CHECK(reparsed.separation == 3.5);
    CHECK(reparsed.noise_std == 0.5);
    CHECK(reparsed.num_classes == 4);
    CHECK(reparsed.modality_dims == ModalityDims{3, 2, 1});
    CHECK(reparsed.seed == 99);
    CHECK(serialize_synth_config(reparsed) == serialize_synth_config(config));
  }
  SUBCASE("parse rejections") {
    CHECK_THROWS_AS(parse_synth_config("oops"), ParseError);
    CHECK_THROWS_AS(parse_synth_config("[]"), FormatError);
    CHECK_THROWS_WITH_AS(parse_synth_config("{\"mystery\": 1}"),
                         doctest::Contains("unknown key 'mystery'"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_synth_config("{\"speakers\": {\"min\": 1, \"max\": 2}}"),
        doctest::Contains("[lo, hi]"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_synth_config("{\"seed\": -4}"),
                         doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_AS(load_synth_config("/nonexistent/path.json"), ParseError);
  }
  SUBCASE("validation rejections") {
    auto broken = [](auto mutate) {
      SynthConfig config;
      mutate(config);
      return config;
    };
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.num_conversations = 0; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.speakers = {3, 2}; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.utterances = {0, 0}; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.shift_probability = 1.5; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.shift_probability = -0.1; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.separation = 0.0; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.noise_std = -1.0; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.num_classes = 0; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.num_classes = 64; }).validate(),
        ConfigError);
    CHECK_THROWS_AS(
        broken([](SynthConfig& c) { c.modality_dims = {0, 0, 0}; }).validate(),
        ConfigError);
  }
}

TEST_CASE("generator structure and determinism") {
  SynthConfig config;
  config.num_conversations = 6;
  config.speakers = {2, 3};
  config.utterances = {4, 8};
  config.num_classes = 5;
  config.modality_dims = {3, 2, 0};
  config.seed = 11;

  DatasetManifest a = generate_synthetic(config);
  CHECK(a.name == "synthetic");
  CHECK(a.emotion_labels.size() == 5);
  CHECK(a.emotion_labels[0] == "happy");
  REQUIRE(a.conversations.size() == 6);
  CHECK(a.conversations[0].id == "synth-000001");
  CHECK(a.conversations[5].id == "synth-000006");
  for (const Conversation& conv : a.conversations) {
    CHECK(conv.size() >= 4);
    CHECK(conv.size() <= 8);
    std::set<std::string> speakers;
    for (const Utterance& u : conv.utterances) {
      speakers.insert(u.speaker);
      REQUIRE(u.label.has_value());
      CHECK(u.text_feat.size() == 3);
      CHECK(u.audio_feat.size() == 2);
      CHECK(u.visual_feat.size() == 0);
    }
    CHECK(speakers.size() <= 3);
  }
  CHECK_NOTHROW(validate_manifest(a));

  SUBCASE("same seed reproduces bytes, another seed does not") {
    DatasetManifest b = generate_synthetic(config);
    CHECK(serialize_dataset(a) == serialize_dataset(b));
    config.seed = 12;
    DatasetManifest c = generate_synthetic(config);
    CHECK(serialize_dataset(a) != serialize_dataset(c));
  }
  SUBCASE("generated data survives a save/load round trip") {
    TempDir dir;
    save_dataset(a, dir.file("synth.jsonl"));
    DatasetManifest re = load_dataset(dir.file("synth.jsonl"));
    CHECK(serialize_dataset(re) == serialize_dataset(a));
  }
}

namespace {

// Fraction of consecutive same-speaker utterance pairs whose labels differ.
std::pair<std::size_t, std::size_t> count_shifts(const DatasetManifest& m) {
  std::size_t pairs = 0, shifts = 0;
  for (const Conversation& conv : m.conversations) {
    std::map<std::string, int> last;
    for (const Utterance& u : conv.utterances) {
      auto it = last.find(u.speaker);
      if (it != last.end()) {
        ++pairs;
        if (it->second != *u.label) ++shifts;
      }
      last[u.speaker] = *u.label;
    }
  }
  return {shifts, pairs};
}

}  // namespace

TEST_CASE("shift probability matches the empirical shift rate") {
  SynthConfig config;
  config.num_conversations = 400;
  config.speakers = {2, 2};
  config.utterances = {8, 12};
  config.num_classes = 6;
  config.modality_dims = {2, 0, 0};
  config.seed = 5;

  SUBCASE("intermediate probability") {
    config.shift_probability = 0.3;
    auto [shifts, pairs] = count_shifts(generate_synthetic(config));
    REQUIRE(pairs >= 2000);
    double rate = double(shifts) / double(pairs);
    CHECK(rate == doctest::Approx(0.3).epsilon(0.05 / 0.3));
    CHECK(std::fabs(rate - 0.3) <= 0.05);
  }
  SUBCASE("zero probability never shifts") {
    config.shift_probability = 0.0;
    auto [shifts, pairs] = count_shifts(generate_synthetic(config));
    REQUIRE(pairs > 0);
    CHECK(shifts == 0);
  }
  SUBCASE("unit probability always shifts") {
    config.shift_probability = 1.0;
    auto [shifts, pairs] = count_shifts(generate_synthetic(config));
    REQUIRE(pairs > 0);
    CHECK(shifts == pairs);
  }
}

TEST_CASE("classes are separable at four sigma") {
  SynthConfig config;
  config.num_conversations = 100;
  config.speakers = {2, 3};
  config.utterances = {6, 10};
  config.shift_probability = 0.3;
  config.separation = 4.0;
  config.noise_std = 1.0;
  config.num_classes = 6;
  config.modality_dims = {8, 4, 4};
  config.seed = 21;

  DatasetManifest data = generate_synthetic(config);
  std::size_t total = 0, correct = 0;
  for (const Conversation& conv : data.conversations) {
    for (const Utterance& u : conv.utterances) {
      // The class mean moves only along the leading dim of each modality, so
      // the nearest-centroid rule reduces to those three coordinates.
      double best = 1e300;
      int best_k = -1;
      for (int k = 0; k < 6; ++k) {
        double mean = double(k) * config.separation;
        double d = 0.0;
        for (double x : {u.text_feat[0], u.audio_feat[0], u.visual_feat[0]}) {
          d += (x - mean) * (x - mean);
        }
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      ++total;
      if (best_k == *u.label) ++correct;
    }
  }
  CHECK(total >= 600);
  CHECK(double(correct) / double(total) >= 0.95);
}

TEST_CASE("dataset splitting") {
  SynthConfig config;
  config.num_conversations = 10;
  config.modality_dims = {2, 0, 0};
  config.seed = 3;
  DatasetManifest data = generate_synthetic(config);

  SUBCASE("fractions carve conversation counts within one") {
    auto splits = split_dataset(data, {0.8, 0.1, 0.1}, 17);
    CHECK(splits[0].conversations.size() == 8);
    CHECK(splits[1].conversations.size() == 1);
    CHECK(splits[2].conversations.size() == 1);

    std::set<std::string> seen;
    for (const auto& split : splits) {
      CHECK(split.name == data.name);
      CHECK(split.emotion_labels == data.emotion_labels);
      CHECK(split.modality_dims == data.modality_dims);
      CHECK_NOTHROW(validate_manifest(split));
      for (const Conversation& conv : split.conversations) {
        CHECK(seen.insert(conv.id).second);
      }
    }
    CHECK(seen.size() == 10);
  }
  SUBCASE("per-split order follows the source manifest") {
    auto splits = split_dataset(data, {0.5, 0.3, 0.2}, 17);
    std::vector<std::string> source_ids;
    for (const Conversation& conv : data.conversations) {
      source_ids.push_back(conv.id);
    }
    for (const auto& split : splits) {
      std::vector<std::size_t> positions;
      for (const Conversation& conv : split.conversations) {
        auto it = std::find(source_ids.begin(), source_ids.end(), conv.id);
        REQUIRE(it != source_ids.end());
        positions.push_back(std::size_t(it - source_ids.begin()));
      }
      CHECK(std::is_sorted(positions.begin(), positions.end()));
    }
  }
  SUBCASE("equal thirds use largest remainders, ties by split order") {
    SynthConfig seven = config;
    seven.num_conversations = 7;
    DatasetManifest data7 = generate_synthetic(seven);
    auto splits = split_dataset(data7, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1);
    CHECK(splits[0].conversations.size() == 3);
    CHECK(splits[1].conversations.size() == 2);
    CHECK(splits[2].conversations.size() == 2);
  }
  SUBCASE("same seed reproduces the split") {
    auto a = split_dataset(data, {0.6, 0.2, 0.2}, 9);
    auto b = split_dataset(data, {0.6, 0.2, 0.2}, 9);
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(serialize_dataset(a[s]) == serialize_dataset(b[s]));
    }
    auto c = split_dataset(data, {0.6, 0.2, 0.2}, 10);
    bool any_difference = false;
    for (std::size_t s = 0; s < 3; ++s) {
      any_difference |= serialize_dataset(a[s]) != serialize_dataset(c[s]);
    }
    CHECK(any_difference);
  }
  SUBCASE("config errors") {
    CHECK_THROWS_WITH_AS(split_dataset(data, {0.5, 0.25, 0.2}, 1),
                         doctest::Contains("sum"), ConfigError);
    CHECK_THROWS_WITH_AS(split_dataset(data, {1.0, 0.0, 0.0}, 1),
                         doctest::Contains("positive"), ConfigError);
    SynthConfig tiny = config;
    tiny.num_conversations = 2;
    DatasetManifest data2 = generate_synthetic(tiny);
    CHECK_THROWS_WITH_AS(split_dataset(data2, {0.8, 0.1, 0.1}, 1),
                         doctest::Contains("cannot fill"), ConfigError);
  }
}
