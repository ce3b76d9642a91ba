#include "lsdgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>

namespace lsdgnn {

void ModelConfig::validate() const {
  if (num_layers < 1) {
    throw ConfigError("model: num_layers must be at least 1");
  }
  if (hidden_dim < 1) {
    throw ConfigError("model: hidden_dim must be at least 1");
  }
  if (!omega_long.is_unbounded() && omega_long.value() < 2) {
    throw ConfigError("model: omega_long must be at least 2 (1 is the short "
                      "channel's bound)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("model: dropout must lie in [0, 1)");
  }
  if (!(lambda_reg >= 0.0) || !std::isfinite(lambda_reg)) {
    throw ConfigError("model: lambda_reg must be a nonnegative number");
  }
  if (num_classes < 1) {
    throw ConfigError("model: num_classes must be at least 1");
  }
  if (modality_dims.total() == 0) {
    throw ConfigError("model: all modality widths are zero");
  }
  if (!(epsilon_reg > 0.0)) {
    throw ConfigError("model: epsilon_reg must be positive");
  }
  if (!(reg_cap > 0.0)) {
    throw ConfigError("model: reg_cap must be positive");
  }
}

namespace {

// Walks every parameter in its canonical order. The provider either creates
// (init) or binds (from_store) the named tensor.
void wire_params(LSDGNNParams& params,
                 const std::function<Tensor(const std::string&, Shape)>& provide) {
  const ModelConfig& config = params.config;
  const std::size_t h = config.hidden_dim;
  const std::size_t a = config.modality_dims.audio;
  const std::size_t v = config.modality_dims.visual;

  if (a > 0) {
    params.enc_audio_w = provide("encoder.audio.weight", {a, a});
    params.enc_audio_b = provide("encoder.audio.bias", {a});
  }
  if (v > 0) {
    params.enc_visual_w = provide("encoder.visual.weight", {v, v});
    params.enc_visual_b = provide("encoder.visual.bias", {v});
  }
  params.fusion_w = provide("fusion.weight", {config.modality_dims.total(), h});
  params.fusion_b = provide("fusion.bias", {h});

  auto wire_channel = [&](const char* channel,
                          std::vector<LayerChannelParams>& layers) {
    layers.clear();
    for (std::size_t l = 1; l <= config.num_layers; ++l) {
      const std::string prefix =
          std::string(channel) + ".layer" + std::to_string(l);
      LayerChannelParams layer;
      layer.attention = provide(prefix + ".attention.weight", {2 * h, 1});
      layer.relation_diff = provide(prefix + ".relation_diff.weight", {h, h});
      layer.relation_same = provide(prefix + ".relation_same.weight", {h, h});
      auto wire_gru = [&](const char* name) {
        GruWeights w;
        const std::string base = prefix + "." + name;
        w.update_w = provide(base + ".update.weight", {2 * h, h});
        w.update_b = provide(base + ".update.bias", {h});
        w.reset_w = provide(base + ".reset.weight", {2 * h, h});
        w.reset_b = provide(base + ".reset.bias", {h});
        w.candidate_w = provide(base + ".candidate.weight", {2 * h, h});
        w.candidate_b = provide(base + ".candidate.bias", {h});
        return w;
      };
      layer.gru_state = wire_gru("gru_state");
      layer.gru_context = wire_gru("gru_context");
      layers.push_back(std::move(layer));
    }
  };
  wire_channel("long", params.long_layers);
  wire_channel("short", params.short_layers);

  params.biaffine.clear();
  for (std::size_t l = 1; l <= config.num_layers; ++l) {
    const std::string prefix = "biaffine.layer" + std::to_string(l);
    BiaffineParams exchange;
    exchange.w_long = provide(prefix + ".long.weight", {h, h});
    exchange.w_short = provide(prefix + ".short.weight", {h, h});
    params.biaffine.push_back(std::move(exchange));
  }

  params.cls_hidden_w =
      provide("classifier.hidden.weight", {config.assembled_width(), h});
  params.cls_hidden_b = provide("classifier.hidden.bias", {h});
  params.cls_out_w = provide("classifier.out.weight", {h, config.num_classes});
  params.cls_out_b = provide("classifier.out.bias", {config.num_classes});
}

}  // namespace

LSDGNNParams LSDGNNParams::init(const ModelConfig& config,
                                std::mt19937_64& rng) {
  config.validate();
  LSDGNNParams params;
  params.config = config;
  wire_params(params, [&](const std::string& name, Shape shape) {
    return params.store.add(name,
                            Tensor::glorot_uniform(std::move(shape), rng));
  });
  return params;
}

LSDGNNParams LSDGNNParams::from_store(const ModelConfig& config,
                                      ParameterStore store) {
  config.validate();
  LSDGNNParams params;
  params.config = config;
  params.store = std::move(store);
  std::vector<std::string> expected;
  wire_params(params, [&](const std::string& name, Shape shape) {
    Tensor tensor;
    try {
      tensor = params.store.get(name);
    } catch (const LookupError&) {
      throw ConfigError("parameters: missing tensor '" + name + "'");
    }
    if (tensor.shape() != shape) {
      throw DimensionError("parameters: '" + name + "' has shape " +
                           shape_str(tensor.shape()) + ", expected " +
                           shape_str(shape));
    }
    expected.push_back(name);
    return tensor;
  });
  if (expected.size() != params.store.size()) {
    for (const auto& [name, tensor] : params.store) {
      (void)tensor;
      if (std::find(expected.begin(), expected.end(), name) ==
          expected.end()) {
        throw ConfigError("parameters: unexpected tensor '" + name + "'");
      }
    }
  }
  return params;
}

Tensor fuse_modalities(const Utterance& utterance,
                       const LSDGNNParams& params) {
  const ModalityDims& dims = params.config.modality_dims;
  if (dims.total() == 0) {
    throw DataError("fuse: all modalities absent");
  }
  auto check_width = [&](std::size_t actual, std::size_t expected,
                         const char* what) {
    if (actual != expected) {
      throw DimensionError("fuse: utterance " +
                           std::to_string(utterance.index) + " has " +
                           std::to_string(actual) + " " + what +
                           " features, expected " + std::to_string(expected));
    }
  };
  check_width(utterance.audio_feat.size(), dims.audio, "audio");
  check_width(utterance.visual_feat.size(), dims.visual, "visual");
  check_width(utterance.text_feat.size(), dims.text, "text");

  std::vector<Tensor> parts;
  if (dims.audio > 0) {
    Tensor audio = Tensor::from_data({1, dims.audio}, utterance.audio_feat);
    parts.push_back(linear(audio, params.enc_audio_w, params.enc_audio_b));
  }
  if (dims.visual > 0) {
    Tensor visual = Tensor::from_data({1, dims.visual}, utterance.visual_feat);
    parts.push_back(linear(visual, params.enc_visual_w, params.enc_visual_b));
  }
  if (dims.text > 0) {
    parts.push_back(Tensor::from_data({1, dims.text}, utterance.text_feat));
  }
  return parts.size() == 1 ? parts.front() : concat(parts, 1);
}

Tensor encode_modalities(const Utterance& utterance,
                         const LSDGNNParams& params) {
  return linear(fuse_modalities(utterance, params), params.fusion_w,
                params.fusion_b);
}

std::pair<Tensor, Tensor> dag_layer_forward(const Tensor& prev_states,
                                            const ConversationDAG& dag,
                                            const LayerChannelParams& layer) {
  std::vector<std::string> violations = validate_dag(dag);
  if (!violations.empty()) {
    throw ContractError("dag layer: invalid graph: " + violations.front());
  }
  if (prev_states.rank() != 2 || prev_states.rows() != dag.n_nodes) {
    throw DimensionError("dag layer: states " + shape_str(prev_states.shape()) +
                         " do not cover " + std::to_string(dag.n_nodes) +
                         " nodes");
  }
  const std::size_t n = dag.n_nodes;
  const std::size_t h = prev_states.cols();

  std::vector<Tensor> new_rows;
  std::vector<Tensor> attention_rows;
  new_rows.reserve(n);
  attention_rows.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const Tensor own_prev = row(prev_states, i - 1);
    const auto preds = predecessors(dag, i);
    Tensor aggregate;
    if (preds.empty()) {
      aggregate = Tensor::zeros({1, h});
      attention_rows.push_back(Tensor::zeros({1, n}));
    } else {
      // Scores pair each predecessor's current-layer state with this
      // node's previous-layer state; one scalar per edge.
      std::vector<Tensor> scores;
      std::vector<Tensor> transformed;
      std::vector<std::size_t> cols;
      scores.reserve(preds.size());
      transformed.reserve(preds.size());
      for (const auto& [source, relation] : preds) {
        const Tensor& source_state = new_rows[source - 1];
        scores.push_back(
            matmul(concat({source_state, own_prev}, 1), layer.attention));
        transformed.push_back(matmul(
            source_state,
            relation == 1 ? layer.relation_same : layer.relation_diff));
        cols.push_back(source - 1);
      }
      Tensor alpha = softmax(
          scores.size() == 1 ? scores.front() : concat(scores, 1), 1);
      aggregate = matmul(alpha, transformed.size() == 1
                                    ? transformed.front()
                                    : concat(transformed, 0));
      attention_rows.push_back(scatter_row(alpha, cols, n));
    }
    Tensor state_update = gru_cell(aggregate, own_prev, layer.gru_state);
    Tensor context_update = gru_cell(own_prev, aggregate, layer.gru_context);
    new_rows.push_back(add(state_update, context_update));
  }
  Tensor states = new_rows.size() == 1 ? new_rows.front() : concat(new_rows, 0);
  Tensor attention = attention_rows.size() == 1 ? attention_rows.front()
                                                : concat(attention_rows, 0);
  return {states, attention};
}

std::pair<Tensor, Tensor> biaffine_exchange(const Tensor& h_long,
                                            const Tensor& h_short,
                                            const Tensor& w_long,
                                            const Tensor& w_short) {
  if (h_long.rank() != 2 || h_short.rank() != 2 ||
      h_long.shape() != h_short.shape()) {
    throw DimensionError("biaffine: channel states " +
                         shape_str(h_long.shape()) + " and " +
                         shape_str(h_short.shape()) + " must match");
  }
  Tensor long_scores = matmul(matmul(h_long, w_long), transpose(h_short));
  Tensor short_scores = matmul(matmul(h_short, w_short), transpose(h_long));
  Tensor long_primed = matmul(softmax(long_scores, 1), h_short);
  Tensor short_primed = matmul(softmax(short_scores, 1), h_long);
  return {long_primed, short_primed};
}

Tensor assemble_features(const std::vector<Tensor>& long_primed,
                         const std::vector<Tensor>& short_primed,
                         const Tensor& fused_input) {
  if (long_primed.empty() || long_primed.size() != short_primed.size()) {
    throw ContractError("assemble: need the same nonzero layer count per "
                        "channel, got " +
                        std::to_string(long_primed.size()) + " and " +
                        std::to_string(short_primed.size()));
  }
  std::vector<Tensor> parts;
  parts.reserve(2 * long_primed.size() + 1);
  for (const Tensor& t : long_primed) parts.push_back(t);
  for (const Tensor& t : short_primed) parts.push_back(t);
  parts.push_back(fused_input);
  return concat(parts, 1);
}

Classification classify(const Tensor& assembled, const LSDGNNParams& params) {
  Classification result;
  Tensor hidden = relu(
      linear(assembled, params.cls_hidden_w, params.cls_hidden_b));
  result.logits = linear(hidden, params.cls_out_w, params.cls_out_b);
  result.probabilities = softmax(result.logits, 1);
  result.predictions = argmax_rows(result.probabilities);
  return result;
}

Tensor differential_regularizer(const ChannelTrace& trace_short,
                                const ChannelTrace& trace_long,
                                double epsilon_reg, double reg_cap) {
  if (trace_short.attention.size() != trace_long.attention.size() ||
      trace_short.attention.empty()) {
    throw ContractError("regularizer: channel traces hold " +
                        std::to_string(trace_short.attention.size()) +
                        " and " + std::to_string(trace_long.attention.size()) +
                        " attention layers");
  }
  std::vector<Tensor> per_layer;
  per_layer.reserve(trace_short.attention.size());
  for (std::size_t l = 0; l < trace_short.attention.size(); ++l) {
    Tensor distance =
        frobenius_distance(trace_short.attention[l], trace_long.attention[l]);
    Tensor inverse = reciprocal(add_scalar(distance, epsilon_reg));
    per_layer.push_back(reshape(min_with(inverse, reg_cap), {1}));
  }
  return mean(per_layer.size() == 1 ? per_layer.front()
                                    : concat(per_layer, 0));
}

ModelOutput model_forward(const Conversation& conversation,
                          const LSDGNNParams& params, ForwardMode mode,
                          std::mt19937_64* rng) {
  const ModelConfig& config = params.config;
  const bool use_dropout = mode == ForwardMode::train && config.dropout > 0.0;
  if (use_dropout && rng == nullptr) {
    throw ContractError("model_forward: train-mode dropout needs an rng");
  }

  // Eval mode never builds a tape; its outputs are pure values.
  std::unique_ptr<NoGradGuard> guard;
  if (mode == ForwardMode::eval) guard = std::make_unique<NoGradGuard>();

  const ConversationDAG dag_long = build_dag(conversation, config.omega_long);
  const ConversationDAG dag_short =
      build_dag(conversation, ModelConfig::omega_short());

  std::vector<Tensor> fused_rows;
  fused_rows.reserve(conversation.size());
  for (const Utterance& u : conversation.utterances) {
    fused_rows.push_back(fuse_modalities(u, params));
  }
  Tensor fused = fused_rows.size() == 1 ? fused_rows.front()
                                        : concat(fused_rows, 0);
  Tensor states0 = linear(fused, params.fusion_w, params.fusion_b);
  if (use_dropout) states0 = dropout(states0, config.dropout, *rng);

  ModelOutput output;
  Tensor long_states = states0;
  Tensor short_states = states0;
  std::vector<Tensor> long_primed;
  std::vector<Tensor> short_primed;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    auto [long_next, long_attention] =
        dag_layer_forward(long_states, dag_long, params.long_layers[l]);
    if (use_dropout) long_next = dropout(long_next, config.dropout, *rng);
    auto [short_next, short_attention] =
        dag_layer_forward(short_states, dag_short, params.short_layers[l]);
    if (use_dropout) short_next = dropout(short_next, config.dropout, *rng);

    auto [long_mixed, short_mixed] =
        biaffine_exchange(long_next, short_next, params.biaffine[l].w_long,
                          params.biaffine[l].w_short);
    long_primed.push_back(long_mixed);
    short_primed.push_back(short_mixed);
    output.long_trace.attention.push_back(long_attention);
    output.short_trace.attention.push_back(short_attention);

    // The exchange feeds the classifier concatenation; the raw states feed
    // the next layer unless configured otherwise.
    long_states = config.biaffine_feeds_next_layer ? long_mixed : long_next;
    short_states = config.biaffine_feeds_next_layer ? short_mixed : short_next;
    output.long_trace.hidden.push_back(long_states);
    output.short_trace.hidden.push_back(short_states);
  }

  Tensor assembled = assemble_features(long_primed, short_primed, states0);
  Classification cls = classify(assembled, params);
  output.logits = cls.logits;
  output.probabilities = cls.probabilities;
  output.predictions = std::move(cls.predictions);
  output.regularizer = differential_regularizer(
      output.short_trace, output.long_trace, config.epsilon_reg,
      config.reg_cap);
  return output;
}

Tensor total_loss(const Tensor& logits, const std::vector<int>& labels,
                  const Tensor& regularizer, double lambda_reg) {
  Tensor ce = cross_entropy_loss(logits, labels);
  if (!regularizer.defined() || !regularizer.is_scalar()) {
    throw ContractError("total_loss: regularizer must be a scalar");
  }
  return add(ce, scale(regularizer, lambda_reg));
}

Tensor batch_total_loss(const std::vector<ModelOutput>& outputs,
                        const std::vector<std::vector<int>>& labels,
                        double lambda_reg) {
  if (outputs.empty() || outputs.size() != labels.size()) {
    throw ContractError("batch loss: " + std::to_string(outputs.size()) +
                        " outputs for " + std::to_string(labels.size()) +
                        " label sets");
  }
  Tensor ce_total;
  std::vector<Tensor> regs;
  regs.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    Tensor ce = cross_entropy_loss(outputs[i].logits, labels[i]);
    ce_total = ce_total.defined() ? add(ce_total, ce) : ce;
    regs.push_back(reshape(outputs[i].regularizer, {1}));
  }
  Tensor reg_mean = mean(regs.size() == 1 ? regs.front() : concat(regs, 0));
  return add(ce_total, scale(reg_mean, lambda_reg));
}

std::vector<int> conversation_labels(const Conversation& conversation) {
  std::vector<int> labels;
  labels.reserve(conversation.size());
  for (const Utterance& u : conversation.utterances) {
    if (!u.label.has_value()) {
      throw DataError("conversation '" + conversation.id + "' utterance " +
                      std::to_string(u.index) + " has no label");
    }
    labels.push_back(*u.label);
  }
  return labels;
}

}  // namespace lsdgnn
