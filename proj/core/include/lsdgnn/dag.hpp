#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lsdgnn/conversation.hpp"
#include "lsdgnn/errors.hpp"

namespace lsdgnn {

// Same-speaker lookback bound: a positive count or unbounded.
class Omega {
 public:
  static Omega bounded(std::size_t value);  // ConfigError when value < 1
  static Omega unbounded();
  static Omega parse(const std::string& text);  // "unbounded" or an integer

  bool is_unbounded() const { return unbounded_; }
  std::size_t value() const;  // ContractError when unbounded
  // True when `count` same-speaker connections have exhausted the budget.
  bool reached(std::size_t count) const {
    return !unbounded_ && count >= value_;
  }
  std::string str() const;

  friend bool operator==(const Omega& a, const Omega& b) {
    return a.unbounded_ == b.unbounded_ && a.value_ == b.value_;
  }

 private:
  Omega(bool unbounded, std::size_t value)
      : unbounded_(unbounded), value_(value) {}
  bool unbounded_;
  std::size_t value_;
};

struct Edge {
  std::size_t source = 0;  // 1-based, source < target
  std::size_t target = 0;
  int relation = 0;  // 1 = same speaker at both endpoints, 0 = different

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.source == b.source && a.target == b.target &&
           a.relation == b.relation;
  }
  friend bool operator<(const Edge& a, const Edge& b) {
    if (a.target != b.target) return a.target < b.target;
    if (a.source != b.source) return a.source < b.source;
    return a.relation < b.relation;
  }
};

struct ConversationDAG {
  std::size_t n_nodes = 0;
  std::vector<Edge> edges;  // sorted by (target, source)
  Omega omega = Omega::unbounded();
  std::vector<std::string> speakers;  // per node, for invariant checks
};

// Builds the speaker-aware lookback graph: for each utterance i >= 2, scan
// j = i-1 down to 1 connecting every utterance encountered, and stop once
// omega same-speaker-as-i utterances have been connected (the omega-th is
// included). Earlier utterances, same speaker or not, are left unconnected.
ConversationDAG build_dag(const Conversation& conversation, Omega omega);

// Incoming edges of node i as (source, relation), sources ascending.
std::vector<std::pair<std::size_t, int>> predecessors(
    const ConversationDAG& dag, std::size_t i);

// Checks every structural invariant and reports all violations.
std::vector<std::string> validate_dag(const ConversationDAG& dag);

// One "source target relation" line per edge, sorted by (target, source).
std::string format_edge_list(const ConversationDAG& dag);

}  // namespace lsdgnn
