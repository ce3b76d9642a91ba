#pragma once

#include <random>
#include <string>
#include <vector>

#include "lsdgnn/dag.hpp"
#include "lsdgnn/dataset.hpp"
#include "lsdgnn/param_store.hpp"

namespace lsdgnn {

struct ModelConfig {
  std::size_t num_layers = 4;
  std::size_t hidden_dim = 16;
  Omega omega_long = Omega::bounded(5);
  // The short channel's lookback is pinned to 1.
  double dropout = 0.4;
  double lambda_reg = 0.1;
  std::size_t num_classes = 6;
  ModalityDims modality_dims;
  double epsilon_reg = 1e-8;
  double reg_cap = 100.0;
  bool biaffine_feeds_next_layer = false;

  static Omega omega_short() { return Omega::bounded(1); }
  void validate() const;
  // Width of the concatenated classifier input: both channels' primed
  // states for every layer plus the fused input states.
  std::size_t assembled_width() const {
    return 2 * num_layers * hidden_dim + hidden_dim;
  }
};

// One channel's per-layer parameter slice.
struct LayerChannelParams {
  Tensor attention;  // [2h x 1], scores [state_j ++ prev_i]
  Tensor relation_diff;  // W applied on different-speaker edges, [h x h]
  Tensor relation_same;  // W applied on same-speaker edges, [h x h]
  GruWeights gru_state;    // input = aggregate, hidden = previous state
  GruWeights gru_context;  // input = previous state, hidden = aggregate
};

struct BiaffineParams {
  Tensor w_long;   // [h x h], long queries over short states
  Tensor w_short;  // [h x h], short queries over long states
};

// Typed views over a ParameterStore; every Tensor here shares storage with
// the store entry of the same name.
struct LSDGNNParams {
  ModelConfig config;
  ParameterStore store;

  Tensor enc_audio_w, enc_audio_b;    // absent when audio width is 0
  Tensor enc_visual_w, enc_visual_b;  // absent when visual width is 0
  Tensor fusion_w, fusion_b;
  std::vector<LayerChannelParams> long_layers;
  std::vector<LayerChannelParams> short_layers;
  std::vector<BiaffineParams> biaffine;
  Tensor cls_hidden_w, cls_hidden_b;
  Tensor cls_out_w, cls_out_b;

  static LSDGNNParams init(const ModelConfig& config, std::mt19937_64& rng);
  // Rebinds typed views onto an existing store (checkpoint load); shape or
  // name mismatches throw.
  static LSDGNNParams from_store(const ModelConfig& config,
                                 ParameterStore store);
};

struct ChannelTrace {
  std::vector<Tensor> hidden;     // H^l per layer, [n x h]
  std::vector<Tensor> attention;  // A^l per layer, [n x n], row i on preds
};

enum class ForwardMode { train, eval };

// Encoders on audio/visual, text passthrough, concatenated in the order
// audio, visual, text. One row per call.
Tensor fuse_modalities(const Utterance& utterance, const LSDGNNParams& params);
// fuse_modalities followed by the affine projection to hidden_dim.
Tensor encode_modalities(const Utterance& utterance,
                         const LSDGNNParams& params);

// One message-passing layer over the DAG, nodes in temporal order. Returns
// the updated states [n x h] and the attention matrix [n x n].
std::pair<Tensor, Tensor> dag_layer_forward(const Tensor& prev_states,
                                            const ConversationDAG& dag,
                                            const LayerChannelParams& layer);

// H_long' = rowsoftmax(H_long W_long H_short^T) H_short and symmetrically.
std::pair<Tensor, Tensor> biaffine_exchange(const Tensor& h_long,
                                            const Tensor& h_short,
                                            const Tensor& w_long,
                                            const Tensor& w_short);

// concat(long primed layers..., short primed layers..., fused input).
Tensor assemble_features(const std::vector<Tensor>& long_primed,
                         const std::vector<Tensor>& short_primed,
                         const Tensor& fused_input);

struct Classification {
  Tensor logits;         // [n x K]
  Tensor probabilities;  // [n x K]
  std::vector<int> predictions;
};
Classification classify(const Tensor& assembled, const LSDGNNParams& params);

// mean over layers of min(1 / (frobenius(A_short, A_long) + epsilon), cap).
Tensor differential_regularizer(const ChannelTrace& trace_short,
                                const ChannelTrace& trace_long,
                                double epsilon_reg, double reg_cap);

struct ModelOutput {
  Tensor logits;
  Tensor probabilities;
  Tensor regularizer;  // scalar
  std::vector<int> predictions;
  ChannelTrace long_trace;
  ChannelTrace short_trace;
};

// Full two-channel pass over one conversation. rng feeds dropout and may be
// null in eval mode or when dropout is 0.
ModelOutput model_forward(const Conversation& conversation,
                          const LSDGNNParams& params, ForwardMode mode,
                          std::mt19937_64* rng = nullptr);

// Sum of per-utterance cross entropy plus lambda times the regularizer.
Tensor total_loss(const Tensor& logits, const std::vector<int>& labels,
                  const Tensor& regularizer, double lambda_reg);

// Batch objective: cross entropy summed over every conversation's
// utterances, regularizers averaged across the batch.
Tensor batch_total_loss(const std::vector<ModelOutput>& outputs,
                        const std::vector<std::vector<int>>& labels,
                        double lambda_reg);

std::vector<int> conversation_labels(const Conversation& conversation);

}  // namespace lsdgnn
